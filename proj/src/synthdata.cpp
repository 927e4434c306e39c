#include "dfta/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "dfta/rng.hpp"

namespace dfta::synthdata {

namespace {

constexpr double kPi = 3.14159265358979323846;

// working buffer: RGB in doubles, row-major
struct Canvas {
  int w, h;
  std::vector<double> rgb;  // w*h*3
  Canvas(int w_, int h_) : w(w_), h(h_), rgb(static_cast<std::size_t>(w_) * h_ * 3, 0.0) {}
  double& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
  double at(int x, int y, int c) const { return rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
};

void paint_gradient(Canvas& cv, Rng& rng) {
  double c0[3], c1[3];
  for (auto& v : c0) v = rng.uniform(40.0, 215.0);
  for (auto& v : c1) v = rng.uniform(40.0, 215.0);
  double angle = rng.uniform(0.0, 2.0 * kPi);
  double ripple_amp = rng.uniform(0.0, 10.0);
  double ripple_freq = rng.uniform(1.0, 3.0);
  double ax = std::cos(angle), ay = std::sin(angle);
  double span = std::abs(ax) * (cv.w - 1) + std::abs(ay) * (cv.h - 1) + 1e-9;
  for (int y = 0; y < cv.h; ++y)
    for (int x = 0; x < cv.w; ++x) {
      double t = (ax * x + ay * y) / span;
      t = 0.5 + t * 0.5;  // center the projection
      double ripple = ripple_amp * std::sin(2.0 * kPi * ripple_freq * t);
      for (int c = 0; c < 3; ++c) cv.at(x, y, c) = c0[c] + (c1[c] - c0[c]) * t + ripple;
    }
}

// two-octave value noise: coarse random grids, bilinearly upsampled
void paint_noise_texture(Canvas& cv, Rng& rng) {
  auto octave = [&](int cells, double amp, bool add) {
    std::vector<double> grid(static_cast<std::size_t>(cells + 1) * (cells + 1) * 3);
    for (auto& v : grid) v = rng.uniform(add ? -amp : 40.0, add ? amp : 215.0);
    for (int y = 0; y < cv.h; ++y)
      for (int x = 0; x < cv.w; ++x) {
        double gx = static_cast<double>(x) / (cv.w - 1) * cells;
        double gy = static_cast<double>(y) / (cv.h - 1) * cells;
        int x0 = std::min(static_cast<int>(gx), cells - 1);
        int y0 = std::min(static_cast<int>(gy), cells - 1);
        double fx = gx - x0, fy = gy - y0;
        for (int c = 0; c < 3; ++c) {
          auto g = [&](int i, int j) {
            return grid[(static_cast<std::size_t>(j) * (cells + 1) + i) * 3 + c];
          };
          double v = (1 - fx) * (1 - fy) * g(x0, y0) + fx * (1 - fy) * g(x0 + 1, y0) +
                     (1 - fx) * fy * g(x0, y0 + 1) + fx * fy * g(x0 + 1, y0 + 1);
          if (add)
            cv.at(x, y, c) += v;
          else
            cv.at(x, y, c) = v;
        }
      }
  };
  octave(4, 0.0, false);
  octave(9, 25.0, true);
}

struct FaceParams {
  double skin[3];
  double eye_dx, eye_dy, eye_r, eye_dark;
  double mouth_y_rel, mouth_hw_rel, mouth_dark;
  double shade;
};

FaceParams draw_face_params(Rng& rng) {
  FaceParams p{};
  p.skin[0] = rng.uniform(165.0, 225.0);
  p.skin[1] = p.skin[0] * rng.uniform(0.72, 0.85);
  p.skin[2] = p.skin[1] * rng.uniform(0.75, 0.90);
  p.eye_dx = rng.uniform(0.38, 0.52);
  p.eye_dy = rng.uniform(0.20, 0.34);
  p.eye_r = rng.uniform(1.2, 2.2);
  p.eye_dark = rng.uniform(30.0, 70.0);
  p.mouth_y_rel = rng.uniform(0.38, 0.52);
  p.mouth_hw_rel = rng.uniform(0.30, 0.45);
  p.mouth_dark = rng.uniform(60.0, 110.0);
  p.shade = rng.uniform(0.12, 0.28);
  return p;
}

// alpha-composite a face into the ellipse (cx,cy,rx,ry); edge_softness is the
// blend ramp width in pixels at the boundary
void composite_face(Canvas& cv, double cx, double cy, double rx, double ry,
                    const FaceParams& p, double edge_softness) {
  double r_eff = std::min(rx, ry);
  double soft = std::max(edge_softness, 0.05);
  for (int y = 0; y < cv.h; ++y)
    for (int x = 0; x < cv.w; ++x) {
      double nx = (x - cx) / rx, ny = (y - cy) / ry;
      double r = std::sqrt(nx * nx + ny * ny);
      if (r >= 1.0) continue;
      double alpha = std::min(1.0, (1.0 - r) * r_eff / soft);
      double col[3];
      double shade = 1.0 - p.shade * r * r;
      for (int c = 0; c < 3; ++c) col[c] = p.skin[c] * shade;
      // eyes
      for (double side : {-1.0, 1.0}) {
        double ex = cx + side * p.eye_dx * rx;
        double ey = cy - p.eye_dy * ry;
        double d = std::hypot(x - ex, y - ey);
        if (d < p.eye_r)
          for (int c = 0; c < 3; ++c) col[c] = p.eye_dark;
      }
      // mouth
      double my = cy + p.mouth_y_rel * ry;
      if (std::abs(y - my) < 0.9 && std::abs(x - cx) < p.mouth_hw_rel * rx)
        for (int c = 0; c < 3; ++c) col[c] = std::max(0.0, p.skin[c] - p.mouth_dark);
      for (int c = 0; c < 3; ++c) cv.at(x, y, c) += alpha * (col[c] - cv.at(x, y, c));
    }
}

Canvas box_blur(const Canvas& in, int radius) {
  if (radius <= 0) return in;
  Canvas mid(in.w, in.h), out(in.w, in.h);
  double inv = 1.0 / (2 * radius + 1);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += in.at(std::clamp(x + k, 0, in.w - 1), y, c);
        mid.at(x, y, c) = acc * inv;
      }
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += mid.at(x, std::clamp(y + k, 0, in.h - 1), c);
        out.at(x, y, c) = acc * inv;
      }
  return out;
}

// fractional blur: interpolate between integer box radii
void blur_in_place(Canvas& cv, double radius) {
  if (radius <= 1e-9) return;
  int lo = static_cast<int>(std::floor(radius));
  double frac = radius - lo;
  Canvas a = box_blur(cv, lo);
  if (frac < 1e-9) {
    cv = std::move(a);
    return;
  }
  Canvas b = box_blur(cv, lo + 1);
  for (std::size_t i = 0; i < cv.rgb.size(); ++i) cv.rgb[i] = a.rgb[i] + frac * (b.rgb[i] - a.rgb[i]);
}

Image render_one(const DomainSpec& spec, const DatasetManifest& m, std::uint64_t image_seed,
                 bool fake) {
  Rng rng(image_seed);
  Canvas cv(m.width, m.height);
  if (spec.background == DomainSpec::Texture::gradient)
    paint_gradient(cv, rng);
  else
    paint_noise_texture(cv, rng);

  double cx = m.width / 2.0 + rng.uniform(-2.0, 2.0);
  double cy = m.height / 2.0 + rng.uniform(-2.0, 2.0);
  double rx = m.width * rng.uniform(0.28, 0.34);
  double ry = m.height * rng.uniform(0.34, 0.42);
  FaceParams own = draw_face_params(rng);
  composite_face(cv, cx, cy, rx, ry, own, 1.2);

  if (fake) {
    // a foreign face patch pasted over the face region; the blend ramp at
    // its boundary plus the exposure mismatch is what a detector can key on
    Rng donor_rng(Rng::mix(image_seed, 0xD00DULL));
    FaceParams donor = draw_face_params(donor_rng);
    double ox = donor_rng.uniform(-2.0, 2.0);
    double oy = donor_rng.uniform(-2.0, 2.0);
    double scale = donor_rng.uniform(0.80, 0.92);
    double exposure = donor_rng.uniform() < 0.5 ? donor_rng.uniform(0.66, 0.84)
                                                : donor_rng.uniform(1.18, 1.40);
    for (double& s : donor.skin) s *= exposure;
    donor.eye_dark *= exposure;
    composite_face(cv, cx + ox, cy + oy, rx * scale, ry * scale, donor, spec.seam_softness);
  }

  double brightness = rng.uniform(spec.brightness_lo, spec.brightness_hi);
  for (auto& v : cv.rgb) v *= brightness;

  blur_in_place(cv, spec.blur_radius + rng.uniform(0.0, spec.blur_jitter));

  if (spec.noise_sigma > 0.0)
    for (auto& v : cv.rgb) v += rng.normal() * spec.noise_sigma;

  if (spec.quantize_step > 1)
    for (auto& v : cv.rgb)
      v = std::round(v / spec.quantize_step) * spec.quantize_step;

  Image img(m.width, m.height, m.channels);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (m.channels == 3) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = clamp_u8(cv.at(x, y, c));
      } else {
        double g = (299.0 * cv.at(x, y, 0) + 587.0 * cv.at(x, y, 1) + 114.0 * cv.at(x, y, 2)) / 1000.0;
        img.at(x, y, 0) = clamp_u8(g);
      }
    }
  return img;
}

void validate_manifest(const DatasetManifest& m) {
  if (m.n_real <= 0 || m.n_fake <= 0)
    throw std::invalid_argument("synthdata: per-class counts must be positive");
  if (m.width <= 0 || m.height <= 0 || (m.channels != 1 && m.channels != 3))
    throw std::invalid_argument("synthdata: bad image dimensions");
  double sum = m.train_frac + m.val_frac + m.test_frac;
  if (m.train_frac < 0 || m.val_frac < 0 || m.test_frac < 0 || std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("synthdata: split fractions must be nonnegative and sum to 1");
}

}  // namespace

int count_differences(const DomainSpec& a, const DomainSpec& b) {
  int n = 0;
  n += a.background != b.background;
  n += a.blur_radius != b.blur_radius;
  n += a.blur_jitter != b.blur_jitter;
  n += a.noise_sigma != b.noise_sigma;
  n += a.quantize_step != b.quantize_step;
  n += a.seam_softness != b.seam_softness;
  n += a.brightness_lo != b.brightness_lo;
  n += a.brightness_hi != b.brightness_hi;
  return n;
}

DomainSpec default_domain_a() {
  DomainSpec s;
  s.name = "a";
  s.background = DomainSpec::Texture::gradient;
  s.blur_radius = 0.0;
  s.blur_jitter = 1.4;
  s.noise_sigma = 2.0;
  s.quantize_step = 1;
  s.seam_softness = 0.5;
  s.brightness_lo = 0.70;
  s.brightness_hi = 1.06;
  return s;
}

DomainSpec default_domain_b() {
  DomainSpec s;
  s.name = "b";
  s.background = DomainSpec::Texture::noise;
  s.blur_radius = 1.0;
  s.blur_jitter = 0.7;
  s.noise_sigma = 3.5;
  s.quantize_step = 6;
  s.seam_softness = 1.0;
  s.brightness_lo = 0.60;
  s.brightness_hi = 0.88;
  return s;
}

Dataset generate(const DomainSpec& spec, const DatasetManifest& manifest, std::uint64_t seed,
                 int domain_id) {
  validate_manifest(manifest);
  Dataset ds;
  int total = manifest.n_real + manifest.n_fake;
  ds.items.reserve(static_cast<std::size_t>(total));
  std::uint64_t domain_seed = Rng::mix(seed, static_cast<std::uint64_t>(domain_id) + 0xA11CEULL);
  for (int i = 0; i < total; ++i) {
    bool fake = i >= manifest.n_real;
    LabeledImage li;
    li.label = fake ? 1 : 0;
    li.domain = domain_id;
    li.image = render_one(spec, manifest, Rng::mix(domain_seed, static_cast<std::uint64_t>(i)), fake);
    ds.items.push_back(std::move(li));
  }
  return ds;
}

SplitIndices split(const Dataset& ds, const DatasetManifest& manifest) {
  validate_manifest(manifest);
  if (static_cast<int>(ds.items.size()) != manifest.n_real + manifest.n_fake)
    throw std::invalid_argument("synthdata: dataset size does not match manifest counts");
  SplitIndices out;
  auto cut = [&](int begin, int n) {
    int tr = static_cast<int>(std::floor(manifest.train_frac * n + 1e-9));
    int va = static_cast<int>(std::floor(manifest.val_frac * n + 1e-9));
    for (int i = 0; i < n; ++i) {
      int idx = begin + i;
      if (i < tr)
        out.train.push_back(idx);
      else if (i < tr + va)
        out.val.push_back(idx);
      else
        out.test.push_back(idx);
    }
  };
  cut(0, manifest.n_real);
  cut(manifest.n_real, manifest.n_fake);
  return out;
}

// ---------------------------------------------------------------------------
// file format: magic "DFTA", version u16, count u32, W/H/C u16, then per
// image label u8, domain u8, raw pixels; little-endian throughout

namespace {

constexpr char kMagic[4] = {'D', 'F', 'T', 'A'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}
void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

struct Reader {
  std::istream& is;
  std::size_t pos = 0;
  void bytes(void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
      throw std::runtime_error("dataset: truncated at byte " +
                               std::to_string(pos + static_cast<std::size_t>(is.gcount())));
    pos += n;
  }
  std::uint16_t u16() {
    unsigned char b[2];
    bytes(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
};

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dataset: cannot open for write: " + path);
  if (ds.items.empty()) throw std::invalid_argument("dataset: refusing to save an empty dataset");
  const Image& first = ds.items.front().image;
  os.write(kMagic, 4);
  put_u16(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(ds.items.size()));
  put_u16(os, static_cast<std::uint16_t>(first.width));
  put_u16(os, static_cast<std::uint16_t>(first.height));
  put_u16(os, static_cast<std::uint16_t>(first.channels));
  for (const auto& li : ds.items) {
    if (li.image.width != first.width || li.image.height != first.height ||
        li.image.channels != first.channels)
      throw std::invalid_argument("dataset: mixed image dimensions");
    unsigned char hdr[2] = {static_cast<unsigned char>(li.label),
                            static_cast<unsigned char>(li.domain)};
    os.write(reinterpret_cast<const char*>(hdr), 2);
    os.write(reinterpret_cast<const char*>(li.image.pixels.data()),
             static_cast<std::streamsize>(li.image.pixels.size()));
  }
  if (!os) throw std::runtime_error("dataset: write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("dataset: cannot open: " + path);
  Reader r{is};
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("dataset: bad magic in " + path);
  std::uint16_t version = r.u16();
  if (version != kVersion)
    throw std::runtime_error("dataset: unsupported version " + std::to_string(version));
  std::uint32_t count = r.u32();
  int w = r.u16(), h = r.u16(), c = r.u16();
  if (w == 0 || h == 0 || (c != 1 && c != 3))
    throw std::runtime_error("dataset: bad dimensions in header");
  Dataset ds;
  ds.items.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    unsigned char hdr[2];
    r.bytes(hdr, 2);
    if (hdr[0] > 1)
      throw std::runtime_error("dataset: bad label at byte " + std::to_string(r.pos - 2));
    LabeledImage li;
    li.label = hdr[0];
    li.domain = hdr[1];
    li.image = Image(w, h, c);
    r.bytes(li.image.pixels.data(), li.image.pixels.size());
    ds.items.push_back(std::move(li));
  }
  return ds;
}

void export_png_dir(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream csv(fs::path(dir) / "labels.csv");
  if (!csv) throw std::runtime_error("dataset: cannot write labels.csv in " + dir);
  csv << "filename,label,domain\n";
  char name[32];
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    std::snprintf(name, sizeof(name), "img_%05zu.png", i);
    write_png(ds.items[i].image, (fs::path(dir) / name).string());
    csv << name << "," << ds.items[i].label << "," << ds.items[i].domain << "\n";
  }
}

Dataset import_png_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream csv(fs::path(dir) / "labels.csv");
  if (!csv) throw std::runtime_error("dataset: missing labels.csv in " + dir);
  std::string line;
  if (!std::getline(csv, line) || line != "filename,label,domain")
    throw std::runtime_error("dataset: labels.csv must start with 'filename,label,domain'");
  Dataset ds;
  int lineno = 1;
  while (std::getline(csv, line)) {
    lineno++;
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("dataset: malformed labels.csv line " + std::to_string(lineno));
    LabeledImage li;
    li.label = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
    li.domain = std::stoi(line.substr(c2 + 1));
    if (li.label != 0 && li.label != 1)
      throw std::runtime_error("dataset: bad label on labels.csv line " + std::to_string(lineno));
    li.image = read_png((fs::path(dir) / line.substr(0, c1)).string());
    ds.items.push_back(std::move(li));
  }
  if (ds.items.empty()) throw std::runtime_error("dataset: labels.csv lists no images");
  return ds;
}

}  // namespace dfta::synthdata
