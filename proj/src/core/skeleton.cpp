#include "drivelab/skeleton.hpp"

#include <algorithm>

namespace drivelab {

std::optional<SkeletonFrame> sample_skeleton(const SessionRecording& s, Millis t) {
  const auto& frames = s.skeleton;
  if (frames.empty()) return std::nullopt;
  if (t <= frames.front().t) {
    SkeletonFrame f = frames.front();
    f.t = t;
    return f;
  }
  if (t >= frames.back().t) {
    SkeletonFrame f = frames.back();
    f.t = t;
    return f;
  }
  const auto it = std::upper_bound(frames.begin(), frames.end(), t,
                                   [](Millis v, const SkeletonFrame& f) { return v < f.t; });
  const SkeletonFrame& b = *it;
  const SkeletonFrame& a = *(it - 1);
  if (a.t == t) return a;
  const double alpha = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
  SkeletonFrame out;
  out.t = t;
  const std::size_t n = std::min(a.joints.size(), b.joints.size());
  out.joints.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.joints.push_back({lerp(a.joints[k].position, b.joints[k].position, alpha),
                          slerp(a.joints[k].rotation, b.joints[k].rotation, alpha)});
  }
  return out;
}

bool skeleton_covers(const SessionRecording& s, Millis t0, Millis t1) {
  return !s.skeleton.empty() && s.skeleton.front().t <= t0 && s.skeleton.back().t >= t1;
}

}  // namespace drivelab
