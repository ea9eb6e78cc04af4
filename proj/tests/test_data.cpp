#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qcnn/app.hpp"
#include "qcnn/data.hpp"
#include "qcnn/metrics.hpp"

using namespace qcnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "qcnn_unit_data";
  fs::create_directories(d);
  return d / name;
}

void write_cifar(const fs::path& p, int records, int first_label = 0) {
  std::ofstream out(p, std::ios::binary);
  for (int r = 0; r < records; ++r) {
    out.put(char((first_label + r) % 10));
    for (int i = 0; i < 3072; ++i) out.put(char((r * 7 + i) % 256));
  }
}

Image gradient_image(int h, int w) {
  Image img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(y, x, 0) = float(x) / float(w);
      img.at(y, x, 1) = float(y) / float(h);
      img.at(y, x, 2) = float((x + y) % 5) / 4.0f;
    }
  return img;
}

int count_where(const Image& img, float v) {
  int n = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      n += img.at(y, x, 0) == v && img.at(y, x, 1) == v && img.at(y, x, 2) == v;
  return n;
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("CIFAR-10 records decode as label then R, G, B planes") {
    const fs::path f = scratch("batch.bin");
    write_cifar(f, 3, 4);
    const auto set = load_cifar10_file(f);
    REQUIRE(set.size() == 3);
    CHECK(set.labels == std::vector<int>{4, 5, 6});
    CHECK(set.images[1].height == 32);
    CHECK(set.images[1].at(0, 1, 0) == doctest::Approx(float((7 + 1) % 256) / 255.0f));
    CHECK(set.images[1].at(0, 0, 1) == doctest::Approx(float((7 + 1024) % 256) / 255.0f));
    CHECK(set.images[2].at(31, 31, 2) == doctest::Approx(float((14 + 3071) % 256) / 255.0f));
    CHECK(load_cifar10_file(f, 2).size() == 2);
  }

  TEST_CASE("malformed CIFAR-10 files are rejected") {
    const fs::path f = scratch("short.bin");
    {
      std::ofstream out(f, std::ios::binary);
      out << std::string(100, '\0');
    }
    CHECK_THROWS_AS(load_cifar10_file(f), FormatError);
    const fs::path g = scratch("label.bin");
    write_cifar(g, 1);
    {
      std::fstream io(g, std::ios::binary | std::ios::in | std::ios::out);
      io.put(char(12));
    }
    CHECK_THROWS_AS(load_cifar10_file(g), FormatError);
  }

  TEST_CASE("CIFAR-10 directory layout") {
    const fs::path root = scratch("cifar");
    fs::remove_all(root);
    const fs::path dir = root / "cifar-10-batches-bin";
    fs::create_directories(dir);
    for (int b = 1; b <= 5; ++b) write_cifar(dir / ("data_batch_" + std::to_string(b) + ".bin"), 2, b);
    write_cifar(dir / "test_batch.bin", 3);
    CHECK(find_cifar10(root) == dir);
    CHECK(load_cifar10(root, CifarSplit::train).size() == 10);
    CHECK(load_cifar10(root, CifarSplit::train, 3).labels == std::vector<int>{1, 2, 2});
    CHECK(load_cifar10(root, CifarSplit::test).size() == 3);
    CHECK(find_cifar10(scratch("nowhere")).empty());
  }

  TEST_CASE("PPM and PNG round trip exactly at 8 bits") {
    Image img(5, 7);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = float(i * 37 % 256) / 255.0f;
    write_ppm(scratch("a.ppm"), img);
    write_png(scratch("a.png"), img);
    CHECK(read_ppm(scratch("a.ppm")) == img);
    CHECK(read_png(scratch("a.png")) == img);
    CHECK(read_image(scratch("a.ppm")) == img);
    CHECK(read_image(scratch("a.png")) == img);
    write_image(scratch("b.png"), img);
    CHECK(read_png(scratch("b.png")) == img);
  }

  TEST_CASE("PPM comments and bad headers") {
    {
      std::ofstream out(scratch("c.ppm"), std::ios::binary);
      out << "P6\n# comment\n2 1\n255\n";
      out.write("\xff\x00\x00\x00\x80\xff", 6);
    }
    const Image img = read_ppm(scratch("c.ppm"));
    CHECK(img.width == 2);
    CHECK(img.at(0, 0, 0) == 1.0f);
    CHECK(img.at(0, 1, 1) == doctest::Approx(128.0f / 255.0f));
    {
      std::ofstream out(scratch("d.ppm"), std::ios::binary);
      out << "P3\n1 1\n255\n0 0 0\n";
    }
    CHECK_THROWS_AS(read_ppm(scratch("d.ppm")), FormatError);
    {
      std::ofstream out(scratch("e.ppm"), std::ios::binary);
      out << "P6\n4 4\n255\n\x01\x02";
    }
    CHECK_THROWS_AS(read_ppm(scratch("e.ppm")), FormatError);
  }

  TEST_CASE("crop and resize") {
    const Image img = gradient_image(6, 10);
    const Image sq = center_crop_square(img);
    CHECK(sq.height == 6);
    CHECK(sq.width == 6);
    CHECK(sq.at(0, 0, 0) == img.at(0, 2, 0));
    CHECK(resize_bilinear(sq, 6, 6) == sq);
    Image flat(4, 4, 0.3f);
    for (float v : resize_bilinear(flat, 7, 3).pixels) CHECK(v == doctest::Approx(0.3f));
    const Image half = resize_bilinear(gradient_image(4, 4), 2, 2);
    CHECK(half.at(0, 0, 0) == doctest::Approx(0.125f));
    CHECK(prepare_image(img, 3).height == 3);
  }

  TEST_CASE("image folder loading skips unreadable files") {
    const fs::path dir = scratch("folder");
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_png(dir / "b.png", gradient_image(20, 30));
    write_ppm(dir / "a.ppm", gradient_image(16, 16));
    {
      std::ofstream out(dir / "broken.png");
      out << "not an image";
    }
    {
      std::ofstream out(dir / "notes.txt");
      out << "ignored";
    }
    std::vector<std::string> names;
    const auto imgs = load_image_folder(dir, 8, &names);
    CHECK(names == std::vector<std::string>{"a", "b"});
    CHECK(imgs.size() == 2);
    CHECK(imgs[1].height == 8);
    fs::remove(dir / "a.ppm");
    fs::remove(dir / "b.png");
    CHECK_THROWS_AS(load_image_folder(dir, 8), std::runtime_error);
  }

  TEST_CASE("shift and flip") {
    const Image img = gradient_image(4, 4);
    const Image moved = shift_flip(img, 1, 2, false);
    CHECK(moved.at(2, 1, 0) == img.at(0, 0, 0));
    CHECK(moved.at(0, 0, 1) == 0.0f);
    const Image flipped = shift_flip(img, 0, 0, true);
    CHECK(flipped.at(1, 0, 0) == img.at(1, 3, 0));
    CHECK(shift_flip(flipped, 0, 0, true) == img);
    Rng a(5), b(5);
    CHECK(augment_shift_flip(img, a, 2) == augment_shift_flip(img, b, 2));
    Rng c(5);
    const Image still = augment_shift_flip(img, c, 0);
    const bool unshifted = still == img || still == shift_flip(img, 0, 0, true);
    CHECK(unshifted);
  }

  TEST_CASE("salt and pepper hits exactly floor(ratio HW) pixels") {
    const Image img(10, 10, 0.5f);
    Rng rng(7);
    const Image sp = add_salt_pepper(img, 0.30, rng);
    CHECK(count_where(sp, 0.0f) + count_where(sp, 1.0f) == 30);
    CHECK(count_where(sp, 0.5f) == 70);
    CHECK(count_where(add_salt_pepper(img, 0.0, rng), 0.5f) == 100);
    CHECK_THROWS_AS(add_salt_pepper(img, 1.5, rng), PreconditionError);
    CHECK_THROWS_AS(add_salt_pepper(Image(2, 2, 1.5f), 0.1, rng), ValidationError);
  }

  TEST_CASE("gaussian noise has the requested variance and stays in range") {
    const Image img(100, 100, 0.5f);
    Rng rng(8);
    const Image n = add_gaussian(img, 0.01, rng);
    double sum = 0, sq = 0;
    for (float v : n.pixels) {
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
      sum += v - 0.5;
      sq += (v - 0.5) * (v - 0.5);
    }
    const double count = double(n.pixels.size());
    CHECK(std::abs(sum / count) < 0.002);
    CHECK(sq / count == doctest::Approx(0.01).epsilon(0.05));
    CHECK_THROWS_AS(add_gaussian(img, -1.0, rng), PreconditionError);
  }

  TEST_CASE("corruption is seeded") {
    std::vector<Image> clean{gradient_image(8, 8), gradient_image(8, 8)};
    const auto a = make_denoise_pairs(clean, 3), b = make_denoise_pairs(clean, 3), c = make_denoise_pairs(clean, 4);
    CHECK(a.corrupted == b.corrupted);
    CHECK(a.corrupted != c.corrupted);
    CHECK(a.corrupted[0] != a.corrupted[1]);
    CHECK(psnr(a.corrupted[0], clean[0]) < 20.0);
  }

  TEST_CASE("hold-out split is evenly interleaved") {
    const auto m = holdout_mask(10, 0.4);
    CHECK(std::count(m.begin(), m.end(), true) == 4);
    CHECK(m == std::vector<bool>{false, false, true, false, true, false, false, true, false, true});
    const auto all = holdout_mask(5, 1.0);
    CHECK(std::count(all.begin(), all.end(), true) == 5);
    const auto big = holdout_mask(200, 0.4);
    CHECK(std::count(big.begin(), big.end(), true) == 80);
  }

  TEST_CASE("bundled corpus has at least 200 images") {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(QCNN_SOURCE_DIR "/data/denoise_corpus")) n += e.path().extension() == ".png";
    CHECK(n >= 200);
  }
}
