#pragma once

#include <random>

#include "drivelab/model.hpp"

namespace drivelab::testing {

/// One participant, one session with sorted skeleton, stream, events and a
/// two-sample GPS path; passes validate() with zero errors.
ConfigDocument minimal_document();

/// Random valid document; numbers use full double precision so canonical
/// formatting is exercised.
ConfigDocument random_document(std::mt19937_64& rng);

Quat random_unit_quat(std::mt19937_64& rng);

}  // namespace drivelab::testing
