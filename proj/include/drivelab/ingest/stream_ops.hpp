#pragma once

#include <string>
#include <vector>

#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

enum class Fence { low, high };

const char* to_string(Fence f);

struct OutlierMark {
  std::string stream_name;
  Millis t = 0;
  double value = 0.0;
  Fence fence = Fence::high;
  friend bool operator==(const OutlierMark&, const OutlierMark&) = default;
};

/// Inclusive linear-interpolation quantile (type 7, h = (n-1)p) of sorted data.
double quantile_type7(const std::vector<double>& sorted, double p);

struct IqrFences {
  double q1 = 0.0;
  double q3 = 0.0;
  double low = 0.0;
  double high = 0.0;
};

IqrFences iqr_fences(std::vector<double> values);

/// Samples strictly outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR], in sample order.
/// Fewer than four samples yields no marks and a warning.
std::vector<OutlierMark> detect_outliers(const SampledStream& stream, Report* report = nullptr);

/// Linear resampling on the grid t_first + round(k * 1000 / hz). Never
/// extrapolates and emits nothing strictly inside a gap. Throws
/// std::invalid_argument for hz <= 0 or fewer than two samples.
SampledStream resample(const SampledStream& stream, double target_hz);

/// Median spacing between consecutive samples, ms (0 for < 2 samples).
double median_period_ms(const std::vector<StreamSample>& samples);

/// Gap markers wherever consecutive samples are more than twice the nominal
/// period apart.
std::vector<StreamGap> find_gaps(const std::vector<StreamSample>& samples, double rate_hz);

}  // namespace drivelab
