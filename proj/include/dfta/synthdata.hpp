#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfta/labeled_image.hpp"

namespace dfta::synthdata {

// A rendering recipe for one domain. Reals are a textured background with a
// rendered face ellipse; fakes additionally blend a foreign face patch over
// the face region, leaving a boundary seam. Post-processing (brightness,
// blur, noise, quantization) applies to both classes.
//
// The *_jitter / lo..hi fields give per-image variation inside a domain, so
// an image-specific policy has something to key on.
struct DomainSpec {
  std::string name = "domain";
  enum class Texture { gradient, noise };
  Texture background = Texture::gradient;
  double blur_radius = 0.0;    // base blur in pixels
  double blur_jitter = 0.0;    // per-image extra, uniform in [0, jitter]
  double noise_sigma = 0.0;    // additive gaussian noise, gray levels
  int quantize_step = 1;       // round channels to multiples; 1 = off
  double seam_softness = 0.6;  // fake blend ramp width in pixels
  double brightness_lo = 1.0;  // per-image brightness factor range
  double brightness_hi = 1.0;
};

// number of fields in which two specs differ (distinct domains need >= 2)
int count_differences(const DomainSpec& a, const DomainSpec& b);

// defaults tuned so that a classifier trained on A degrades measurably on B
// while B stays partially recoverable by pixel-level test-time augmentations
DomainSpec default_domain_a();
DomainSpec default_domain_b();

struct DatasetManifest {
  std::uint64_t seed = 0;
  int n_real = 0;  // per domain
  int n_fake = 0;
  int width = 32;
  int height = 32;
  int channels = 3;
  double train_frac = 0.55;
  double val_frac = 0.05;
  double test_frac = 0.40;
};

struct Dataset {
  std::vector<LabeledImage> items;
};

// Deterministic in (spec, manifest, seed): every image derives its own rng
// from hash(seed, domain_id, index).
Dataset generate(const DomainSpec& spec, const DatasetManifest& manifest, std::uint64_t seed,
                 int domain_id);

// per-class contiguous split by the manifest fractions; disjoint, exhaustive
struct SplitIndices {
  std::vector<int> train, val, test;
};
SplitIndices split(const Dataset& ds, const DatasetManifest& manifest);

// binary dataset file, magic "DFTA"
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// directory of PNGs plus labels.csv (filename,label,domain)
void export_png_dir(const Dataset& ds, const std::string& dir);
Dataset import_png_dir(const std::string& dir);

}  // namespace dfta::synthdata
