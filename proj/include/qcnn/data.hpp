#pragma once

// Dataset ingestion, preprocessing, augmentation and noise.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "qcnn/random.hpp"
#include "qcnn/tensor.hpp"

namespace qcnn {

struct LabeledImageSet {
  std::vector<Image> images;
  std::vector<int> labels;
  int classes = 10;

  std::size_t size() const { return images.size(); }
};

struct DenoisePairSet {
  std::vector<Image> clean;
  std::vector<Image> corrupted;
  std::vector<std::string> names;
};

// ---------------------------------------------------------------------------
// CIFAR-10 binary: 3073-byte records, one label byte then R, G, B planes of
// 32x32 bytes.

inline constexpr std::size_t kCifarRecordBytes = 3073;

/// One batch file. limit == 0 reads every record. Throws FormatError on a
/// size that is not a whole number of records or a label >= 10.
LabeledImageSet load_cifar10_file(const std::filesystem::path& file, std::size_t limit = 0);

enum class CifarSplit { train, test };

/// A directory holding data_batch_1..5.bin and test_batch.bin, directly or in
/// a cifar-10-batches-bin subdirectory. Reads at most `limit` records.
LabeledImageSet load_cifar10(const std::filesystem::path& dir, CifarSplit split, std::size_t limit = 0);

/// Resolves the batch directory, or returns an empty path when absent.
std::filesystem::path find_cifar10(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Image files

Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);
/// Dispatches on the file's magic bytes (P6 or PNG).
Image read_image(const std::filesystem::path& path);
/// Dispatches on the extension (.ppm or .png).
void write_image(const std::filesystem::path& path, const Image& img);

Image center_crop_square(const Image& img);
/// Half-pixel-centre bilinear resampling; same-size input is returned unchanged.
Image resize_bilinear(const Image& img, int height, int width);
/// Center crop to a square, then resize to size x size.
Image prepare_image(const Image& img, int size);

/// Every readable .ppm/.png file in name order, prepared to size x size.
/// Unreadable files are skipped with a warning on stderr; an empty result
/// throws std::runtime_error. `names` receives the file stems when given.
std::vector<Image> load_image_folder(const std::filesystem::path& dir, int size = 128,
                                     std::vector<std::string>* names = nullptr);

// ---------------------------------------------------------------------------
// Augmentation and noise. Every function is deterministic given the rng state.

/// Moves content by (dx, dy) pixels (positive = right/down), filling with zeros,
/// after an optional horizontal flip.
Image shift_flip(const Image& img, int dx, int dy, bool flip);

/// Horizontal flip with p = 0.5 and an integer shift in [-max_shift, max_shift]^2.
Image augment_shift_flip(const Image& img, Rng& rng, int max_shift = 4);

/// Same on a (N, 3, H, W) batch, one draw per sample.
template <class T>
void augment_batch(Tensor<T>& batch, Rng& rng, int max_shift = 4);

/// floor(ratio * H * W) distinct pixels, each set to all-0 or all-1 with p = 0.5.
Image add_salt_pepper(const Image& img, double ratio, Rng& rng);

/// Adds N(0, variance) per channel, then clamps to [0, 1].
Image add_gaussian(const Image& img, double variance, Rng& rng);

/// Salt and pepper, then Gaussian.
Image corrupt(const Image& img, Rng& rng, double sp_ratio = 0.30, double variance = 0.01);

/// Corrupts every image with one rng seeded from `seed`.
DenoisePairSet make_denoise_pairs(std::vector<Image> clean, std::uint64_t seed, double sp_ratio = 0.30,
                                  double variance = 0.01);

}  // namespace qcnn
