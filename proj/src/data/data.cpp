#include "qcnn/data.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace qcnn {

namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

void check_unit_range(const Image& img) {
  for (float v : img.pixels)
    if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("image values must lie in [0,1]");
}

unsigned char to_byte(float v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

}  // namespace

LabeledImageSet load_cifar10_file(const fs::path& file, std::size_t limit) {
  const auto bytes = read_bytes(file);
  if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0)
    throw FormatError(file.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of the " +
                      std::to_string(kCifarRecordBytes) + "-byte record length");
  std::size_t n = bytes.size() / kCifarRecordBytes;
  if (limit) n = std::min(n, limit);
  LabeledImageSet set;
  set.images.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const unsigned char* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[0] >= 10) throw FormatError(file.string() + ": record " + std::to_string(r) + " has label " + std::to_string(rec[0]));
    set.labels.push_back(rec[0]);
    Image img(32, 32);
    for (int ch = 0; ch < 3; ++ch)
      for (int i = 0; i < 1024; ++i) img.at(i / 32, i % 32, ch) = float(rec[1 + ch * 1024 + i]) / 255.0f;
    set.images.push_back(std::move(img));
  }
  return set;
}

fs::path find_cifar10(const fs::path& dir) {
  for (const fs::path& d : {dir, dir / "cifar-10-batches-bin"})
    if (fs::exists(d / "test_batch.bin") || fs::exists(d / "data_batch_1.bin")) return d;
  return {};
}

LabeledImageSet load_cifar10(const fs::path& dir, CifarSplit split, std::size_t limit) {
  const fs::path root = find_cifar10(dir);
  if (root.empty()) throw FormatError("no CIFAR-10 binary batches under " + dir.string());
  std::vector<fs::path> files;
  if (split == CifarSplit::test) files.push_back(root / "test_batch.bin");
  else
    for (int i = 1; i <= 5; ++i) files.push_back(root / ("data_batch_" + std::to_string(i) + ".bin"));
  LabeledImageSet set;
  for (const auto& f : files) {
    if (limit && set.size() >= limit) break;
    auto part = load_cifar10_file(f, limit ? limit - set.size() : 0);
    std::move(part.images.begin(), part.images.end(), std::back_inserter(set.images));
    set.labels.insert(set.labels.end(), part.labels.begin(), part.labels.end());
  }
  return set;
}

// ---------------------------------------------------------------------------

Image read_ppm(const fs::path& path) {
  const auto bytes = read_bytes(path);
  std::size_t pos = 0;
  auto token = [&]() {
    std::string t;
    while (pos < bytes.size()) {
      const char c = char(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        ++pos;
      } else {
        t += c;
        ++pos;
      }
    }
    return t;
  };
  if (token() != "P6") throw FormatError(path.string() + ": not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PPM header");
  }
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) throw FormatError(path.string() + ": unsupported PPM dimensions or maxval");
  ++pos;  // single whitespace byte before the raster
  if (bytes.size() < pos + std::size_t(w) * h * 3) throw FormatError(path.string() + ": truncated PPM raster");
  Image img(h, w);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = float(bytes[pos + i]) / float(maxval);
  return img;
}

void write_ppm(const fs::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  for (float v : img.pixels) out.put(char(to_byte(v)));
  if (!out) throw FormatError("failed writing " + path.string());
}

Image read_png(const fs::path& path) {
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.c_str()))
    throw FormatError(path.string() + ": " + pi.message);
  pi.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = pi.message;
    png_image_free(&pi);
    throw FormatError(path.string() + ": " + msg);
  }
  Image img(int(pi.height), int(pi.width));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = float(buf[i]) / 255.0f;
  return img;
}

void write_png(const fs::path& path, const Image& img) {
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  pi.width = png_uint_32(img.width);
  pi.height = png_uint_32(img.height);
  pi.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), buf.begin(), to_byte);
  if (!png_image_write_to_file(&pi, path.c_str(), 0, buf.data(), 0, nullptr))
    throw FormatError("cannot write " + path.string() + ": " + pi.message);
}

Image read_image(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  in.read(magic, 8);
  if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
  if (in.gcount() == 8 && std::memcmp(magic, "\x89PNG\r\n\x1a\n", 8) == 0) return read_png(path);
  throw FormatError(path.string() + ": neither PPM (P6) nor PNG");
}

void write_image(const fs::path& path, const Image& img) {
  const std::string ext = path.extension().string();
  if (ext == ".ppm") write_ppm(path, img);
  else if (ext == ".png") write_png(path, img);
  else throw std::invalid_argument("output image must end in .png or .ppm: " + path.string());
}

Image center_crop_square(const Image& img) {
  const int side = std::min(img.height, img.width);
  const int y0 = (img.height - side) / 2, x0 = (img.width - side) / 2;
  Image out(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = img.at(y0 + y, x0 + x, ch);
  return out;
}

Image resize_bilinear(const Image& img, int height, int width) {
  if (height < 1 || width < 1 || img.height < 1 || img.width < 1) throw ShapeError("resize needs non-empty sizes");
  if (height == img.height && width == img.width) return img;
  Image out(height, width);
  const double sy = double(img.height) / height, sx = double(img.width) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(img.height - 1));
    const int y0 = int(fy), y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(img.width - 1));
      const int x0 = int(fx), x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = img.at(y0, x0, ch) * (1 - wx) + img.at(y0, x1, ch) * wx;
        const double bot = img.at(y1, x0, ch) * (1 - wx) + img.at(y1, x1, ch) * wx;
        out.at(y, x, ch) = float(top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

Image prepare_image(const Image& img, int size) { return resize_bilinear(center_crop_square(img), size, size); }

std::vector<Image> load_image_folder(const fs::path& dir, int size, std::vector<std::string>* names) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".png" || ext == ".ppm" || ext == ".PNG" || ext == ".PPM")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> out;
  for (const auto& f : files) {
    try {
      out.push_back(prepare_image(read_image(f), size));
      if (names) names->push_back(f.stem().string());
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << f.string() << ": " << e.what() << "\n";
    }
  }
  if (out.empty()) throw std::runtime_error("no readable PPM/PNG images in " + dir.string());
  return out;
}

// ---------------------------------------------------------------------------

Image shift_flip(const Image& img, int dx, int dy, bool flip) {
  Image out(img.height, img.width, 0.0f);
  for (int y = 0; y < img.height; ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= img.height) continue;
    for (int x = 0; x < img.width; ++x) {
      int sx = x - dx;
      if (sx < 0 || sx >= img.width) continue;
      if (flip) sx = img.width - 1 - sx;
      for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = img.at(sy, sx, ch);
    }
  }
  return out;
}

namespace {

struct ShiftDraw {
  int dx, dy;
  bool flip;
};

ShiftDraw draw_shift(Rng& rng, int max_shift) {
  ShiftDraw d;
  d.flip = uniform01(rng) < 0.5;
  d.dx = int(below(rng, std::uint64_t(2 * max_shift + 1))) - max_shift;
  d.dy = int(below(rng, std::uint64_t(2 * max_shift + 1))) - max_shift;
  return d;
}

}  // namespace

Image augment_shift_flip(const Image& img, Rng& rng, int max_shift) {
  const ShiftDraw d = draw_shift(rng, max_shift);
  return shift_flip(img, d.dx, d.dy, d.flip);
}

template <class T>
void augment_batch(Tensor<T>& batch, Rng& rng, int max_shift) {
  const int h = batch.height(), w = batch.width(), c = batch.channels();
  std::vector<T> tmp(batch.shape().sample_size());
  for (int n = 0; n < batch.batch(); ++n) {
    const ShiftDraw d = draw_shift(rng, max_shift);
    T* s = batch.sample(n);
    std::fill(tmp.begin(), tmp.end(), T(0));
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y) {
        const int sy = y - d.dy;
        if (sy < 0 || sy >= h) continue;
        for (int x = 0; x < w; ++x) {
          int sx = x - d.dx;
          if (sx < 0 || sx >= w) continue;
          if (d.flip) sx = w - 1 - sx;
          tmp[(std::size_t(ch) * h + y) * w + x] = s[(std::size_t(ch) * h + sy) * w + sx];
        }
      }
    std::copy(tmp.begin(), tmp.end(), s);
  }
}

template void augment_batch<float>(Tensor<float>&, Rng&, int);
template void augment_batch<double>(Tensor<double>&, Rng&, int);

Image add_salt_pepper(const Image& img, double ratio, Rng& rng) {
  check_unit_range(img);
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw PreconditionError("salt-and-pepper ratio must be in [0,1]");
  Image out = img;
  const int hw = img.height * img.width;
  const int count = int(std::floor(ratio * hw));
  if (count == 0) return out;
  const std::vector<int> order = shuffled_indices(hw, rng);
  for (int i = 0; i < count; ++i) {
    const float v = uniform01(rng) < 0.5 ? 0.0f : 1.0f;
    const int p = order[std::size_t(i)];
    for (int ch = 0; ch < 3; ++ch) out.pixels[std::size_t(p) * 3 + ch] = v;
  }
  return out;
}

Image add_gaussian(const Image& img, double variance, Rng& rng) {
  check_unit_range(img);
  if (!(variance >= 0.0)) throw PreconditionError("variance must be non-negative");
  Image out = img;
  if (variance == 0.0) return out;
  const double sigma = std::sqrt(variance);
  for (float& v : out.pixels) v = float(std::clamp(double(v) + sigma * standard_normal(rng), 0.0, 1.0));
  return out;
}

Image corrupt(const Image& img, Rng& rng, double sp_ratio, double variance) {
  return add_gaussian(add_salt_pepper(img, sp_ratio, rng), variance, rng);
}

DenoisePairSet make_denoise_pairs(std::vector<Image> clean, std::uint64_t seed, double sp_ratio, double variance) {
  Rng rng(seed);
  DenoisePairSet set;
  for (const auto& img : clean) set.corrupted.push_back(corrupt(img, rng, sp_ratio, variance));
  set.clean = std::move(clean);
  return set;
}

}  // namespace qcnn
