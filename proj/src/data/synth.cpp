#include "owl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "owl/binary_io.hpp"
#include "owl/error.hpp"
#include "owl/rng.hpp"

namespace owl {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  if (classes.empty()) throw ParameterError("synth: class list is empty");
  std::set<std::string> unique(classes.begin(), classes.end());
  if (unique.size() != classes.size()) throw ParameterError("synth: class names must be unique");
  for (const auto& c : classes)
    if (c.empty()) throw ParameterError("synth: empty class name");
  if (per_class < 1) throw ParameterError("synth: per_class must be >= 1");
  if (cities < 1 || images_per_city < 1) throw ParameterError("synth: need at least one city and image");
  if (min_object < 12 || max_object < min_object) throw ParameterError("synth: bad object size range");
  if (image_width < static_cast<std::size_t>(2 * max_object) || image_height < static_cast<std::size_t>(2 * max_object)) {
    throw ParameterError("synth: image too small for the object size range");
  }
}

const std::vector<std::string>& street_classes() {
  static const std::vector<std::string> names{"car",           "person",   "traffic_sign",
                                              "traffic_light", "building", "vegetation"};
  return names;
}

ClassStyle class_style(std::size_t class_index) {
  static const std::array<ClassStyle, 6> styles{{
      {ShapeFamily::wide_box, 0.0},
      {ShapeFamily::tall_ellipse, 240.0},
      {ShapeFamily::triangle, 120.0},
      {ShapeFamily::tall_box, 60.0},
      {ShapeFamily::house, 300.0},
      {ShapeFamily::blob, 180.0},
  }};
  if (class_index < styles.size()) return styles[class_index];
  const auto shape = static_cast<ShapeFamily>(class_index % 6);
  return {shape, std::fmod(static_cast<double>(class_index) * 137.508, 360.0)};
}

namespace {

struct Rgb {
  double r, g, b;
};

Rgb hsv(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
  const int i = static_cast<int>(h);
  const double f = h - i, p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

bool inside(const std::vector<Point>& poly, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const double xi = poly[i].x, yi = poly[i].y, xj = poly[j].x, yj = poly[j].y;
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

// Polygon for one instance with its box origin at (x, y).
std::vector<Point> make_polygon(ShapeFamily shape, int x, int y, int w, int h, Rng& rng) {
  std::vector<Point> pts;
  auto add = [&](double px, double py) {
    pts.push_back({x + static_cast<int>(std::lround(px * (w - 1))), y + static_cast<int>(std::lround(py * (h - 1)))});
  };
  switch (shape) {
    case ShapeFamily::wide_box:
    case ShapeFamily::tall_box:
      add(0, 0), add(1, 0), add(1, 1), add(0, 1);
      break;
    case ShapeFamily::tall_ellipse:
      for (int k = 0; k < 20; ++k) {
        const double a = 6.283185307179586 * k / 20;
        add(0.5 + 0.5 * std::cos(a), 0.5 + 0.5 * std::sin(a));
      }
      break;
    case ShapeFamily::triangle:
      add(0.5, 0), add(1, 1), add(0, 1);
      break;
    case ShapeFamily::house:
      add(0.5, 0), add(1, 0.35), add(1, 1), add(0, 1), add(0, 0.35);
      break;
    case ShapeFamily::blob:
      for (int k = 0; k < 14; ++k) {
        const double a = 6.283185307179586 * k / 14;
        const double r = 0.5 * rng.uniform(0.6, 1.0);
        add(0.5 + r * std::cos(a), 0.5 + r * std::sin(a));
      }
      break;
  }
  return pts;
}

void aspect(ShapeFamily shape, double size, Rng& rng, int& w, int& h) {
  double ratio = 1.0;  // width / height
  switch (shape) {
    case ShapeFamily::wide_box: ratio = rng.uniform(1.7, 2.2); break;
    case ShapeFamily::tall_ellipse: ratio = rng.uniform(0.42, 0.55); break;
    case ShapeFamily::triangle: ratio = rng.uniform(0.95, 1.15); break;
    case ShapeFamily::tall_box: ratio = rng.uniform(0.38, 0.48); break;
    case ShapeFamily::house: ratio = rng.uniform(0.85, 1.1); break;
    case ShapeFamily::blob: ratio = rng.uniform(0.85, 1.2); break;
  }
  if (ratio >= 1) {
    w = static_cast<int>(size);
    h = std::max(12, static_cast<int>(size / ratio));
  } else {
    h = static_cast<int>(size);
    w = std::max(12, static_cast<int>(size * ratio));
  }
}

void paint_background(RgbImage& img, Rng& rng) {
  const double base = rng.uniform(95, 140);
  const double tint = rng.uniform(-8, 8);
  for (std::size_t y = 0; y < img.height; ++y) {
    const double grad = 25.0 * (static_cast<double>(y) / static_cast<double>(img.height) - 0.5);
    for (std::size_t x = 0; x < img.width; ++x) {
      const double n = rng.uniform(-10, 10);
      std::uint8_t* p = img.at(x, y);
      p[0] = to_byte(base - grad + n);
      p[1] = to_byte(base - grad + n + tint * 0.5);
      p[2] = to_byte(base - grad + n + tint);
    }
  }
}

// Fills the polygon interior with the class colour plus family-specific detail.
void paint_object(RgbImage& img, const std::vector<Point>& poly, ShapeFamily shape, double hue, Rng& rng) {
  int x0 = poly[0].x, x1 = poly[0].x, y0 = poly[0].y, y1 = poly[0].y;
  for (const auto& p : poly) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  }
  const Rgb c = hsv(hue + rng.uniform(-8, 8), rng.uniform(0.65, 0.9), rng.uniform(0.65, 0.95));
  const double w = x1 - x0 + 1, h = y1 - y0 + 1;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (!inside(poly, x + 0.5, y + 0.5)) continue;
      const double u = (x - x0) / w, v = (y - y0) / h;
      double shade = 1.0;
      switch (shape) {
        case ShapeFamily::wide_box:  // windows band and wheels
          if (v > 0.2 && v < 0.45 && u > 0.2 && u < 0.8) shade = 0.55;
          if (v > 0.8 && ((u > 0.12 && u < 0.3) || (u > 0.7 && u < 0.88))) shade = 0.25;
          break;
        case ShapeFamily::tall_ellipse:  // lighter head
          if (v < 0.25) shade = 1.25;
          break;
        case ShapeFamily::triangle:  // inner mark
          if (v > 0.45 && v < 0.8 && std::abs(u - 0.5) < 0.08) shade = 0.3;
          break;
        case ShapeFamily::tall_box: {  // three lamps
          const double cy = v < 1.0 / 3 ? 1.0 / 6 : (v < 2.0 / 3 ? 0.5 : 5.0 / 6);
          if ((u - 0.5) * (u - 0.5) * 0.2 + (v - cy) * (v - cy) < 0.008) shade = 1.45;
          break;
        }
        case ShapeFamily::house:  // window grid
          if (v > 0.45 && std::fmod(u * 4, 1.0) > 0.55 && std::fmod(v * 5, 1.0) > 0.5) shade = 0.5;
          break;
        case ShapeFamily::blob:  // leafy speckle
          shade = rng.uniform(0.7, 1.2);
          break;
      }
      const double n = rng.uniform(-12, 12);
      std::uint8_t* p = img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
      p[0] = to_byte(255 * c.r * shade + n);
      p[1] = to_byte(255 * c.g * shade + n);
      p[2] = to_byte(255 * c.b * shade + n);
    }
  }
}

struct Box {
  int x, y, w, h;
  bool overlaps(const Box& o, int pad) const {
    return x < o.x + o.w + pad && o.x < x + w + pad && y < o.y + o.h + pad && o.y < y + h + pad;
  }
};

std::string two_digits(std::size_t i) { return (i < 10 ? "0" : "") + std::to_string(i); }

std::string six_digits(std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(6 - std::min<std::size_t>(6, s.size()), '0') + s;
}

}  // namespace

std::vector<SynthImage> synth_scenes(const SynthConfig& config) {
  config.validate();
  const std::size_t n_images = config.cities * config.images_per_city;
  const Rng root(config.seed);

  // Deal a shuffled multiset of class labels over the images; with fewer
  // labels than images they are spread evenly so every city gets objects.
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < config.classes.size(); ++c) labels.insert(labels.end(), config.per_class, c);
  Rng deal = root.fork(0);
  deal.shuffle(std::span<std::size_t>(labels));
  std::vector<std::vector<std::size_t>> per_image(n_images);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t slot = labels.size() < n_images ? i * n_images / labels.size() : i % n_images;
    per_image[slot].push_back(labels[i]);
  }

  std::vector<SynthImage> scenes(n_images);
  for (std::size_t img = 0; img < n_images; ++img) {
    Rng rng = root.fork(1000 + img);
    SynthImage& scene = scenes[img];
    const std::size_t city = img / config.images_per_city;
    scene.city = "city" + two_digits(city);
    scene.image_id = scene.city + "_" + six_digits(img % config.images_per_city);
    scene.image = RgbImage(config.image_width, config.image_height);
    scene.annotation.width = static_cast<int>(config.image_width);
    scene.annotation.height = static_cast<int>(config.image_height);
    paint_background(scene.image, rng);

    std::vector<Box> placed;
    for (std::size_t cls : per_image[img]) {
      const ClassStyle style = class_style(cls);
      double scale = 1.0;
      for (int attempt = 0;; ++attempt) {
        if (attempt > 0 && attempt % 100 == 0) scale = std::max(0.4, scale * 0.85);
        const double size = rng.uniform(config.min_object, config.max_object) * scale;
        int w = 0, h = 0;
        aspect(style.shape, std::max(12.0, size), rng, w, h);
        const int x = rng.range(0, static_cast<int>(config.image_width) - w);
        const int y = rng.range(0, static_cast<int>(config.image_height) - h);
        const Box box{x, y, w, h};
        const bool clash = std::any_of(placed.begin(), placed.end(), [&](const Box& b) { return b.overlaps(box, 2); });
        if (clash) {
          if (attempt > 2000) throw ParameterError("synth: cannot place objects; enlarge the image or add images");
          continue;
        }
        placed.push_back(box);
        auto poly = make_polygon(style.shape, x, y, w, h, rng);
        paint_object(scene.image, poly, style.shape, style.hue_degrees, rng);
        scene.annotation.polygons.push_back({config.classes[cls], std::move(poly)});
        break;
      }
    }
  }
  return scenes;
}

std::size_t synth_generate(const SynthConfig& config, const std::string& out_dir) {
  const auto scenes = synth_scenes(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  for (const auto& scene : scenes) {
    const fs::path dir = fs::path(out_dir) / scene.city;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_image(scene.image, (dir / (scene.image_id + ".ppm")).string());
    const std::string json = write_annotation(scene.annotation);
    write_file_bytes((dir / (scene.image_id + "_polygons.json")).string(),
                     std::vector<std::uint8_t>(json.begin(), json.end()));
  }
  return scenes.size();
}

}  // namespace owl
