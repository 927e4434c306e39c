#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dfta/synthdata.hpp"

using namespace dfta;
using namespace dfta::synthdata;

static DatasetManifest small_manifest(int n_real = 12, int n_fake = 12) {
  DatasetManifest m;
  m.seed = 99;
  m.n_real = n_real;
  m.n_fake = n_fake;
  return m;
}

TEST_CASE("generation is deterministic per seed") {
  auto spec = default_domain_a();
  auto m = small_manifest();
  auto a = generate(spec, m, 7, 0);
  auto b = generate(spec, m, 7, 0);
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].image == b.items[i].image);
    CHECK(a.items[i].label == b.items[i].label);
  }
  auto c = generate(spec, m, 8, 0);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.items.size(); ++i)
    any_diff |= !(a.items[i].image == c.items[i].image);
  CHECK(any_diff);
}

TEST_CASE("label counts follow the manifest exactly") {
  auto m = small_manifest(9, 14);
  auto ds = generate(default_domain_b(), m, 3, 1);
  int reals = 0, fakes = 0;
  for (const auto& li : ds.items) (li.label == 1 ? fakes : reals)++;
  CHECK(reals == 9);
  CHECK(fakes == 14);
  for (const auto& li : ds.items) CHECK(li.domain == 1);
}

TEST_CASE("default domains differ in at least two parameters") {
  CHECK(count_differences(default_domain_a(), default_domain_b()) >= 2);
  CHECK(count_differences(default_domain_a(), default_domain_a()) == 0);
}

// mean absolute gradient in a band around the face boundary; fakes carry a
// blending seam there, reals do not
static double seam_band_gradient(const Image& img) {
  double cx = img.width / 2.0, cy = img.height / 2.0;
  double rx = img.width * 0.31, ry = img.height * 0.38;
  double acc = 0.0;
  long n = 0;
  for (int y = 1; y < img.height - 1; ++y)
    for (int x = 1; x < img.width - 1; ++x) {
      double nx = (x - cx) / rx, ny = (y - cy) / ry;
      double r = std::sqrt(nx * nx + ny * ny);
      if (r < 0.78 || r > 1.12) continue;
      for (int c = 0; c < img.channels; ++c) {
        acc += std::abs(static_cast<int>(img.at(x + 1, y, c)) - img.at(x, y, c));
        acc += std::abs(static_cast<int>(img.at(x, y + 1, c)) - img.at(x, y, c));
      }
      n += 2 * img.channels;
    }
  return acc / static_cast<double>(n);
}

TEST_CASE("fakes have sharper seam-band gradients than reals") {
  for (auto spec : {default_domain_a(), default_domain_b()}) {
    auto m = small_manifest(200, 200);
    auto ds = generate(spec, m, 11, 0);
    double real_sum = 0.0, fake_sum = 0.0;
    for (const auto& li : ds.items)
      (li.label == 1 ? fake_sum : real_sum) += seam_band_gradient(li.image);
    double real_mean = real_sum / 200.0, fake_mean = fake_sum / 200.0;
    CAPTURE(spec.name);
    CHECK(fake_mean > real_mean);
  }
}

TEST_CASE("splits are disjoint and exhaustive per class") {
  auto m = small_manifest(20, 30);
  m.train_frac = 0.5;
  m.val_frac = 0.2;
  m.test_frac = 0.3;
  auto ds = generate(default_domain_a(), m, 5, 0);
  auto s = split(ds, m);
  std::vector<int> seen(ds.items.size(), 0);
  for (int i : s.train) seen[static_cast<std::size_t>(i)]++;
  for (int i : s.val) seen[static_cast<std::size_t>(i)]++;
  for (int i : s.test) seen[static_cast<std::size_t>(i)]++;
  for (int v : seen) CHECK(v == 1);
  CHECK(s.train.size() == 25);  // 10 + 15
  CHECK(s.val.size() == 10);    // 4 + 6
  CHECK(s.test.size() == 15);   // 6 + 9

  // both classes appear in every split
  auto has_both = [&](const std::vector<int>& idx) {
    bool c0 = false, c1 = false;
    for (int i : idx) (ds.items[static_cast<std::size_t>(i)].label == 1 ? c1 : c0) = true;
    return c0 && c1;
  };
  CHECK(has_both(s.train));
  CHECK(has_both(s.val));
  CHECK(has_both(s.test));
}

TEST_CASE("invalid manifests are rejected") {
  auto spec = default_domain_a();
  auto m = small_manifest();
  m.n_real = 0;
  CHECK_THROWS_AS(generate(spec, m, 1, 0), std::invalid_argument);
  m = small_manifest();
  m.channels = 2;
  CHECK_THROWS_AS(generate(spec, m, 1, 0), std::invalid_argument);
  m = small_manifest();
  m.train_frac = 0.9;  // fractions no longer sum to 1
  CHECK_THROWS_AS(generate(spec, m, 1, 0), std::invalid_argument);
}

TEST_CASE("dataset file round-trip is byte-identical") {
  auto m = small_manifest(5, 7);
  auto ds = generate(default_domain_b(), m, 21, 1);
  save_dataset(ds, "test_synth.dfta");
  auto back = load_dataset("test_synth.dfta");
  REQUIRE(back.items.size() == ds.items.size());
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    CHECK(back.items[i].image == ds.items[i].image);
    CHECK(back.items[i].label == ds.items[i].label);
    CHECK(back.items[i].domain == ds.items[i].domain);
  }
  std::filesystem::remove("test_synth.dfta");
}

TEST_CASE("corrupt dataset files are rejected with a position") {
  {
    std::ofstream os("test_synth_bad.dfta", std::ios::binary);
    os << "WHAT";
  }
  CHECK_THROWS_WITH_AS(load_dataset("test_synth_bad.dfta"), doctest::Contains("bad magic"),
                       std::runtime_error);

  auto m = small_manifest(2, 2);
  auto ds = generate(default_domain_a(), m, 1, 0);
  save_dataset(ds, "test_synth_bad.dfta");
  auto full = std::filesystem::file_size("test_synth_bad.dfta");
  std::filesystem::resize_file("test_synth_bad.dfta", full - 100);
  CHECK_THROWS_WITH_AS(load_dataset("test_synth_bad.dfta"), doctest::Contains("truncated at byte"),
                       std::runtime_error);
  std::filesystem::remove("test_synth_bad.dfta");
}

TEST_CASE("png directory export and import round-trip") {
  auto m = small_manifest(3, 4);
  auto ds = generate(default_domain_a(), m, 31, 0);
  export_png_dir(ds, "test_synth_pngdir");
  auto back = import_png_dir("test_synth_pngdir");
  REQUIRE(back.items.size() == ds.items.size());
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    CHECK(back.items[i].image == ds.items[i].image);
    CHECK(back.items[i].label == ds.items[i].label);
    CHECK(back.items[i].domain == ds.items[i].domain);
  }
  std::filesystem::remove_all("test_synth_pngdir");
  CHECK_THROWS_AS(import_png_dir("test_synth_pngdir"), std::runtime_error);
}
