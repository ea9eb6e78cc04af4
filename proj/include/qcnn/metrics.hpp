#pragma once

// Evaluation metrics, colorfulness diagnostics and CSV reporting.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qcnn/tensor.hpp"

namespace qcnn {

/// Fraction of equal entries. Throws ShapeError on a length mismatch or empty input.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// 10 log10(1 / MSE) over every channel of both images after clamping to
/// [0,1]. Identical images give +infinity.
double psnr(const Image& output, const Image& reference);

/// Mean over pixels of HSV saturation (max - min) / max, 0 where max is 0.
double mean_saturation(const Image& img);

/// Mean over pixels of the angle between the color vector and the gray axis,
/// 0 for black pixels.
double mean_gray_angle(const Image& img);

/// a - b
inline double psnr_difference(double a, double b) { return a - b; }

/// Formats a value with 6 significant digits; infinities print as "inf".
std::string format_number(double v);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double eval_metric = 0.0;
  double wall_secs = 0.0;
};

inline constexpr const char* kMetricsHeader = "epoch,train_loss,eval_metric,wall_secs";

std::string metrics_csv(std::span<const EpochRecord> records);
void write_metrics_csv(std::span<const EpochRecord> records, const std::filesystem::path& path);
/// Throws FormatError on a wrong header or malformed row.
std::vector<EpochRecord> parse_metrics_csv(const std::string& text);
std::vector<EpochRecord> read_metrics_csv(const std::filesystem::path& path);

struct PairedRecord {
  std::string image_id;
  double saturation = 0.0;
  double gray_angle = 0.0;
  double psnr_real = 0.0;
  double psnr_quat = 0.0;

  /// psnr_real - psnr_quat
  double difference() const { return psnr_difference(psnr_real, psnr_quat); }
};

inline constexpr const char* kPairedHeader = "image_id,S,A,psnr_real,psnr_quat,D";

std::string paired_csv(std::span<const PairedRecord> records);
void write_paired_csv(std::span<const PairedRecord> records, const std::filesystem::path& path);

/// Writes `text` to `path`, throwing FormatError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace qcnn
