#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "eventsnn/types.hpp"

namespace eventsnn::data {

enum class YinYangClass : int { yin = 0, yang = 1, dot = 2 };
inline constexpr int kNumClasses = 3;

const char* class_name(YinYangClass c);

struct YinYangPoint {
  double x = 0.0;
  double y = 0.0;
  YinYangClass label = YinYangClass::yin;
};

/// Geometry of the yin-yang disk: big radius 0.5 centred at (0.5, 0.5), dots
/// of radius r_small at (0.25, 0.5) and (0.75, 0.5).
struct YinYangGeometry {
  double r_big = 0.5;
  double r_small = 0.1;

  bool inside(double x, double y) const;
  YinYangClass classify(double x, double y) const;
};

/// Rejection sampling inside the big disk; sample k targets class k mod 3, so
/// the class histogram is balanced to within one sample.
std::vector<YinYangPoint> generate(std::uint64_t seed, int n, const YinYangGeometry& geo = {});

struct EncodingConfig {
  double t_early = 0.0;
  double t_late = 1.5;
  double t_bias = 0.9 * 1.5;
  bool bias_enabled = true;
};

struct EncodedSample {
  std::vector<Spike> spikes;  // input channels 0..4, sorted by time
  YinYangClass label = YinYangClass::yin;
};

/// Channels: 0 = x, 1 = y, 2 = mirrored x, 3 = mirrored y, 4 = bias.
EncodedSample encode(const YinYangPoint& p, const EncodingConfig& cfg);
int encoded_channels(const EncodingConfig& cfg);

/// Inverts the affine map on channels 0 and 1.
YinYangPoint decode(const EncodedSample& s, const EncodingConfig& cfg);

/// Dataset text file: header `x,y,label`, one point per line, label as integer.
void write_dataset(std::ostream& os, const std::vector<YinYangPoint>& points);
std::vector<YinYangPoint> read_dataset(std::istream& is);

/// Encoded sets use the spike-file format with a `# sample <k> label=<c>`
/// separator before each block.
void write_encoded(std::ostream& os, const std::vector<EncodedSample>& samples);

}  // namespace eventsnn::data
