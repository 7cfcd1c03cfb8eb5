#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "drivelab/collab/ledger.hpp"
#include "drivelab/collab/sequencer.hpp"
#include "support/builders.hpp"

using namespace drivelab;

namespace {

struct FakeClock {
  Millis now = 1'700'000'000'000;
  Clock fn() {
    return [this] { return now; };
  }
};

SyncMessage propose(SyncKind kind, const std::string& origin, Json payload) {
  SyncMessage m;
  m.kind = kind;
  m.origin = origin;
  m.payload = std::move(payload);
  return m;
}

Json comment(const std::string& id, const std::string& text) {
  return {{"id", id}, {"kind", "comment"}, {"text", text}};
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "drivelab_collab_test";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

// Random client proposal touching a small shared id space so conflicts occur.
SyncMessage random_op(std::mt19937_64& rng, const std::string& origin, Millis duration) {
  std::uniform_int_distribution<int> pick(0, 7);
  std::uniform_int_distribution<int> id(0, 4);
  std::uniform_int_distribution<Millis> t(0, duration);
  const std::string ann = "a" + std::to_string(id(rng));
  switch (pick(rng)) {
    case 0:
      return propose(SyncKind::set_playback, origin, {{"t", t(rng)}, {"playing", rng() % 2 == 0}});
    case 1:
      return propose(SyncKind::set_playback, origin, {{"rate", static_cast<double>(rng() % 17) * 0.5 - 4.0}});
    case 2:
      return propose(SyncKind::create_annotation, origin, comment(ann, origin + " says " + std::to_string(rng() % 100)));
    case 3:
      return propose(SyncKind::update_annotation, origin, comment(ann, "edit " + std::to_string(rng() % 100)));
    case 4:
      return propose(SyncKind::delete_annotation, origin, {{"id", ann}});
    case 5:
      return propose(SyncKind::presence, origin,
                     {{"display_name", origin},
                      {"view", rng() % 2 ? "vr" : "desktop"},
                      {"pose", {{"position", {1.0 * id(rng), 2.0, 1.5}}, {"orientation", {1, 0, 0, 0}}}},
                      {"frustum", {{"h_fov", 90}, {"v_fov", 60}}}});
    case 6:
      return propose(SyncKind::create_ghost, origin,
                     {{"t", t(rng)}, {"camera", {{"position", {0, 0, 2}}, {"orientation", {1, 0, 0, 0}}}},
                      {"label", "look here"}});
    default:
      return propose(SyncKind::set_visibility, origin,
                     {{"heatmaps", {{"gaze-ego", rng() % 2 == 0}}}, {"trajectories", rng() % 2 == 0}});
  }
}

}  // namespace

TEST_CASE("sequence numbers are gap-free and joins see the current seq") {
  const auto doc = testing::minimal_document();
  FakeClock clock;
  Sequencer seq(doc, clock.fn());
  for (int i = 0; i < 5; ++i) {
    const auto r = seq.apply(propose(SyncKind::set_playback, "alice", {{"t", 100 * i}}));
    REQUIRE(r.accepted);
    CHECK(r.message.seq == i + 1);
  }
  CHECK_FALSE(seq.apply(propose(SyncKind::set_playback, "alice", {{"t", 999999}})).accepted);
  const auto snap = seq.join("bob");
  CHECK(snap.kind == SyncKind::snapshot);
  CHECK(snap.seq == 5);
  CHECK(snap.payload["playback"]["t"] == 400);
}

TEST_CASE("concurrent annotation edits resolve last-writer-wins") {
  const auto doc = testing::minimal_document();
  FakeClock clock;
  Sequencer seq(doc, clock.fn());
  REQUIRE(seq.apply(propose(SyncKind::create_annotation, "alice", comment("n1", "first"))).accepted);
  const auto a = seq.apply(propose(SyncKind::update_annotation, "alice", comment("n1", "from alice")));
  const auto b = seq.apply(propose(SyncKind::update_annotation, "bob", comment("n1", "from bob")));
  REQUIRE(a.accepted);
  REQUIRE(b.accepted);
  CHECK(a.message.seq == 2);
  CHECK(b.message.seq == 3);
  const Annotation& n = seq.state().annotations.at("n1");
  CHECK(n.text == "from bob");
  CHECK(n.author == "alice");
  CHECK(n.created_seq == 1);
}

TEST_CASE("create and delete, stale delete rejected") {
  const auto doc = testing::minimal_document();
  FakeClock clock;
  Sequencer seq(doc, clock.fn());
  REQUIRE(seq.apply(propose(SyncKind::create_annotation, "alice", comment("n1", "x"))).accepted);
  CHECK_FALSE(seq.apply(propose(SyncKind::create_annotation, "bob", comment("n1", "y"))).accepted);
  REQUIRE(seq.apply(propose(SyncKind::delete_annotation, "bob", {{"id", "n1"}})).accepted);
  const auto stale = seq.apply(propose(SyncKind::delete_annotation, "alice", {{"id", "n1"}}));
  CHECK_FALSE(stale.accepted);
  CHECK(stale.message.kind == SyncKind::error);
  CHECK(stale.message.seq == 0);
  CHECK(stale.message.payload["rejected_kind"] == "delete_annotation");
  CHECK(seq.state().annotations.empty());
  CHECK(seq.state().seq == 2);
}

TEST_CASE("labels snap to the ego path position") {
  const auto doc = testing::minimal_document();
  FakeClock clock;
  Sequencer seq(doc, clock.fn());
  const auto r = seq.apply(propose(SyncKind::create_annotation, "alice",
                                   {{"id", "l1"}, {"kind", "label"}, {"text", "here"}, {"t", 1000}}));
  REQUIRE(r.accepted);
  const auto& a = seq.state().annotations.at("l1");
  REQUIRE(a.position);
  CHECK(a.position->x > 5.0);
  CHECK_FALSE(seq.apply(propose(SyncKind::create_annotation, "alice",
                                {{"id", "l2"}, {"kind", "label"}, {"text", "late"}, {"t", 5000}}))
                  .accepted);
}

TEST_CASE("presence decays from snapshots after the timeout") {
  const auto doc = testing::minimal_document();
  FakeClock clock;
  Sequencer seq(doc, clock.fn());
  REQUIRE(seq.apply(propose(SyncKind::presence, "alice",
                            {{"display_name", "Alice"},
                             {"view", "vr"},
                             {"pose", {{"position", {0, 0, 1}}, {"orientation", {1, 0, 0, 0}}}}}))
              .accepted);
  CHECK(seq.join("bob").payload["presences"].size() == 1);
  clock.now += kPresenceTimeout;
  CHECK(seq.join("bob").payload["presences"].size() == 1);
  clock.now += 1;
  CHECK(seq.join("bob").payload["presences"].empty());
  CHECK(seq.state().presences.count("alice") == 1);
}

TEST_CASE("selecting a ghost moves shared playback") {
  const auto doc = testing::minimal_document();
  FakeClock clock;
  Sequencer seq(doc, clock.fn());
  const auto g = seq.apply(propose(SyncKind::create_ghost, "alice",
                                   {{"t", 1500},
                                    {"camera", {{"position", {1, 2, 3}}, {"orientation", {1, 0, 0, 0}}}},
                                    {"label", "brake"}}));
  REQUIRE(g.accepted);
  CHECK(g.message.payload["id"] == "ghost-1");
  const auto s = seq.apply(propose(SyncKind::select_ghost, "bob", {{"id", "ghost-1"}}));
  REQUIRE(s.accepted);
  CHECK(s.message.kind == SyncKind::set_playback);
  CHECK(s.message.payload["recommended_view"]["position"] == Json::array({1, 2, 3}));
  CHECK(seq.state().playback.t == 1500);
  CHECK_FALSE(seq.apply(propose(SyncKind::select_ghost, "bob", {{"id", "ghost-9"}})).accepted);
}

TEST_CASE("proposals with a seq or server-only kinds are rejected") {
  const auto doc = testing::minimal_document();
  FakeClock clock;
  Sequencer seq(doc, clock.fn());
  auto m = propose(SyncKind::set_playback, "alice", {{"t", 10}});
  m.seq = 4;
  CHECK_FALSE(seq.apply(m).accepted);
  CHECK_FALSE(seq.apply(propose(SyncKind::snapshot, "alice", Json::object())).accepted);
  CHECK_FALSE(seq.apply(propose(SyncKind::set_playback, "alice", {{"rate", 9.0}})).accepted);
  CHECK_FALSE(seq.apply(propose(SyncKind::set_playback, "alice", {{"t", "soon"}})).accepted);
  CHECK(seq.state().seq == 0);
}

TEST_CASE("sync messages parse strictly and encode canonically") {
  const auto m = parse_sync_message(std::string_view(
      R"({"seq":0,"kind":"set_playback","origin":"a","payload":{"t":5,"rate":1.5}})"));
  CHECK(m.kind == SyncKind::set_playback);
  CHECK(encode_sync_message(m) == R"({"kind":"set_playback","origin":"a","payload":{"rate":1.5,"t":5},"seq":0})");
  CHECK_THROWS_AS(parse_sync_message(std::string_view(R"({"seq":0,"kind":"x","origin":"a","payload":{}})")),
                  ParseError);
  CHECK_THROWS_AS(
      parse_sync_message(std::string_view(R"({"seq":0,"kind":"hello","origin":"a","payload":{},"extra":1})")),
      ParseError);
  CHECK_THROWS_AS(parse_sync_message(std::string_view("{")), ParseError);
}

TEST_CASE("clients converge under random interleavings") {
  const auto doc = testing::minimal_document();
  const std::vector<std::string> analysts{"alice", "bob", "carol"};
  for (int run = 0; run < 50; ++run) {
    std::mt19937_64 rng(1000 + run);
    FakeClock clock;
    Sequencer seq(doc, clock.fn());
    std::vector<SessionMirror> mirrors(analysts.size());
    std::vector<bool> joined(analysts.size(), false);
    // Each client has a queue of 34 proposals; the arrival order interleaves them.
    std::vector<std::vector<SyncMessage>> queues(analysts.size());
    for (std::size_t c = 0; c < analysts.size(); ++c) {
      for (int i = 0; i < 34; ++i) queues[c].push_back(random_op(rng, analysts[c], seq.state().duration));
    }
    std::vector<std::size_t> next(analysts.size(), 0);
    int sent = 0;
    while (sent < 100) {
      const std::size_t c = rng() % analysts.size();
      if (next[c] >= queues[c].size()) continue;
      if (!joined[c] && rng() % 4 != 0) {
        mirrors[c].receive(seq.join(analysts[c]));
        joined[c] = true;
      }
      clock.now += static_cast<Millis>(rng() % 50);
      const auto r = seq.apply(queues[c][next[c]++]);
      ++sent;
      if (r.accepted) {
        for (std::size_t k = 0; k < mirrors.size(); ++k) {
          if (joined[k]) CHECK(mirrors[k].receive(r.message));
        }
      }
    }
    for (std::size_t c = 0; c < analysts.size(); ++c) {
      if (!joined[c]) mirrors[c].receive(seq.join(analysts[c]));
    }
    const std::string expected = canonical_dump(snapshot_payload(seq.state(), clock.now));
    for (const auto& m : mirrors) {
      CHECK(canonical_dump(snapshot_payload(m.state(), clock.now)) == expected);
    }
  }
}

TEST_CASE("ledger replay reproduces the live state, also after a torn write") {
  const auto doc = testing::minimal_document();
  const auto path = temp_file("ledger.ndjson");
  FakeClock clock;
  Sequencer seq(doc, clock.fn());
  std::mt19937_64 rng(7);
  std::vector<std::string> states;
  {
    Ledger ledger(path);
    for (int i = 0; i < 200; ++i) {
      clock.now += 13;
      const auto r = seq.apply(random_op(rng, i % 2 ? "alice" : "bob", seq.state().duration));
      if (!r.accepted) continue;
      ledger.append(r.message);
      states.push_back(canonical_dump(full_state_json(seq.state())));
    }
  }
  REQUIRE(states.size() > 50);
  auto contents = read_ledger(path);
  CHECK_FALSE(contents.truncated_tail);
  REQUIRE(contents.messages.size() == states.size());
  CHECK(canonical_dump(full_state_json(replay_ledger(doc, contents.messages))) == states.back());

  // Simulate a crash halfway through writing the last line.
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 7);
  contents = read_ledger(path);
  CHECK(contents.truncated_tail);
  REQUIRE(contents.messages.size() == states.size() - 1);
  const SessionState restored = replay_ledger(doc, contents.messages);
  CHECK(canonical_dump(full_state_json(restored)) == states[states.size() - 2]);

  // Reopening trims the torn tail and the sequence continues without a gap.
  {
    Ledger ledger(path);
    Sequencer resumed(doc, restored, clock.fn());
    const auto r = resumed.apply(propose(SyncKind::set_playback, "alice", {{"t", 1}}));
    REQUIRE(r.accepted);
    CHECK(r.message.seq == static_cast<std::int64_t>(states.size()));
    ledger.append(r.message);
  }
  contents = read_ledger(path);
  CHECK_FALSE(contents.truncated_tail);
  CHECK(contents.messages.size() == states.size());

  const auto bad = temp_file("bad.ndjson");
  write_file(bad, "{\"seq\":1}\n{}\n");
  CHECK_THROWS_AS(read_ledger(bad), ParseError);
}

TEST_CASE("a rejoining client matches a client that never left") {
  const auto doc = testing::minimal_document();
  FakeClock clock;
  Sequencer seq(doc, clock.fn());
  std::mt19937_64 rng(99);
  SessionMirror stayed;
  stayed.receive(seq.join("alice"));
  SessionMirror rejoined;
  rejoined.receive(seq.join("bob"));
  for (int i = 0; i < 60; ++i) {
    const auto r = seq.apply(random_op(rng, i % 2 ? "alice" : "carol", seq.state().duration));
    if (!r.accepted) continue;
    stayed.receive(r.message);
    if (i < 20) rejoined.receive(r.message);
  }
  SessionMirror fresh;
  fresh.receive(seq.join("bob"));
  CHECK(canonical_dump(snapshot_payload(fresh.state(), clock.now)) ==
        canonical_dump(snapshot_payload(stayed.state(), clock.now)));
  // A mirror that missed messages refuses out-of-order input rather than diverging.
  const auto r = seq.apply(propose(SyncKind::set_playback, "alice", {{"t", 3}}));
  CHECK_FALSE(rejoined.receive(r.message));
}
