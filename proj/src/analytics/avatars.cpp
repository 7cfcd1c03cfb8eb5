#include "drivelab/analytics/avatars.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "drivelab/skeleton.hpp"

namespace drivelab {

Quat mean_rotation(const std::vector<Quat>& qs) {
  if (qs.empty()) return Quat::identity();
  Quat sum{0.0, 0.0, 0.0, 0.0};
  for (const Quat& q0 : qs) {
    const Quat q = dot(q0, qs.front()) < 0.0 ? -q0 : q0;
    sum = {sum.w + q.w, sum.x + q.x, sum.y + q.y, sum.z + q.z};
  }
  if (norm(sum) == 0.0) return qs.front();
  return normalized(sum);
}

AggregatedSkeleton aggregate_avatars(const std::vector<const SessionRecording*>& sessions, Millis t_start,
                                     Millis t_end, double rate_hz, Report* report) {
  if (t_end < t_start) throw std::invalid_argument("empty window");
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw std::invalid_argument("rate must be positive");

  std::vector<const SessionRecording*> members;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const SessionRecording* s = sessions[i];
    if (!s) continue;
    if (!skeleton_covers(*s, t_start, t_end)) {
      if (report) {
        report->warning("aggregate." + s->participant_id,
                        "skeleton does not cover [" + std::to_string(t_start) + ", " + std::to_string(t_end) +
                            "], session left out");
      }
      continue;
    }
    members.push_back(s);
  }
  if (members.empty()) throw std::invalid_argument("no session with skeleton data covering the window");
  std::stable_sort(members.begin(), members.end(), [](const SessionRecording* a, const SessionRecording* b) {
    if (a->participant_id != b->participant_id) return a->participant_id < b->participant_id;
    if (a->condition != b->condition) return a->condition < b->condition;
    return a->t0 < b->t0;
  });
  for (const auto* m : members) {
    if (m->joint_names != members.front()->joint_names) {
      throw std::invalid_argument("joint sets differ between " + members.front()->participant_id + " and " +
                                  m->participant_id);
    }
  }

  AggregatedSkeleton out;
  out.joint_names = members.front()->joint_names;
  out.t_start = t_start;
  out.t_end = t_end;
  out.rate_hz = rate_hz;
  for (const auto* m : members) out.member_ids.push_back(m->participant_id);

  const std::size_t joints = out.joint_names.size();
  const double n = static_cast<double>(members.size());
  std::vector<SkeletonFrame> sampled(members.size());
  std::vector<Quat> rots(members.size());
  for (long k = 0;; ++k) {
    const Millis t = t_start + static_cast<Millis>(std::llround(static_cast<double>(k) * 1000.0 / rate_hz));
    if (t > t_end) break;
    for (std::size_t m = 0; m < members.size(); ++m) sampled[m] = *sample_skeleton(*members[m], t);
    SkeletonFrame f;
    f.t = t;
    f.joints.resize(joints);
    std::vector<double> disp(joints, 0.0);
    for (std::size_t j = 0; j < joints; ++j) {
      Vec3 mean;
      for (std::size_t m = 0; m < members.size(); ++m) {
        mean += sampled[m].joints[j].position;
        rots[m] = sampled[m].joints[j].rotation;
      }
      mean = mean / n;
      double var = 0.0;
      for (std::size_t m = 0; m < members.size(); ++m) {
        const Vec3 d = sampled[m].joints[j].position - mean;
        var += dot(d, d);
      }
      f.joints[j].position = members.size() == 1 ? sampled[0].joints[j].position : mean;
      f.joints[j].rotation = members.size() == 1 ? sampled[0].joints[j].rotation : mean_rotation(rots);
      disp[j] = std::sqrt(var / n);
    }
    out.frames.push_back(std::move(f));
    out.dispersion.push_back(std::move(disp));
  }
  return out;
}

void to_json(Json& j, const AggregatedSkeleton& a) {
  j = {{"member_ids", a.member_ids}, {"joint_names", a.joint_names}, {"t_start", a.t_start},
       {"t_end", a.t_end},           {"rate_hz", a.rate_hz},         {"frames", a.frames},
       {"dispersion", a.dispersion}};
}

}  // namespace drivelab
