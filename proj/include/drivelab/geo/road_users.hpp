#pragma once

#include <string>
#include <vector>

#include "drivelab/model.hpp"

namespace drivelab {

/// Objects with no sample within this window of the query time are omitted.
inline constexpr Millis kRoadUserWindow = 2000;

struct PlacedObject {
  std::string object_id;
  ObjectClass object_class = ObjectClass::other;
  Vec3 position;
  friend bool operator==(const PlacedObject&, const PlacedObject&) = default;
};

/// Positions of all covered objects at t, sorted by object id. Between two
/// samples the position is linear; with only one neighbour it is held.
std::vector<PlacedObject> place_road_users(const std::vector<TrackedObjectSample>& samples, Millis t);

}  // namespace drivelab
