#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"

namespace drivelab {

/// Largest-triangle-three-buckets downsampling. Keeps the first and last
/// sample; returns the input unchanged when it already fits. max_points
/// below 3 keeps only the endpoints.
std::vector<StreamSample> lttb(const std::vector<StreamSample>& samples, std::size_t max_points);

/// Payload of the streams endpoint: one entry per session carrying a stream
/// with this name, samples in [from, to] downsampled to max_points, the
/// window mean, IQR outliers inside the window and gaps overlapping it.
Json stream_window(const ConfigDocument& doc, const std::string& name, Millis from, Millis to,
                   std::size_t max_points);

}  // namespace drivelab
