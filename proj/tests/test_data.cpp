#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "owl/annotation.hpp"
#include "owl/binary_io.hpp"
#include "owl/crop.hpp"
#include "owl/crop_store.hpp"
#include "owl/error.hpp"
#include "owl/image.hpp"
#include "owl/ingest.hpp"
#include "owl/partition.hpp"
#include "owl/rng.hpp"
#include "owl/synth.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("owl_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

owl::LabeledPolygon poly(std::vector<owl::Point> pts, std::string label = "car") { return {std::move(label), std::move(pts)}; }

owl::Tensor random_image(int h, int w, owl::Rng& rng) {
  owl::Tensor t({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3});
  for (auto& v : t.storage()) v = static_cast<float>(rng.uniform());
  return t;
}

owl::CropStore small_store(std::size_t n, std::uint64_t seed) {
  owl::CropStore store;
  store.labels = owl::LabelSet({"car", "person", "traffic_sign"});
  owl::Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    owl::Sample s;
    s.bytes.resize(owl::kSampleBytes);
    for (auto& b : s.bytes) b = static_cast<std::uint8_t>(rng.below(256));
    s.label_id = static_cast<std::uint16_t>(rng.below(3));
    s.provenance = {"city" + std::to_string(i % 4), "img" + std::to_string(i / 4), static_cast<std::uint32_t>(i)};
    store.samples.push_back(std::move(s));
  }
  return store;
}

}  // namespace

// ---- annotations

TEST(Annotation, MinimalDocument) {
  const auto a = owl::parse_annotation(
      R"({"imgHeight": 100, "imgWidth": 200, "objects": [{"label": "car", "polygon": [[1,2],[30,2],[30,20],[1,20]]}]})");
  ASSERT_EQ(a.polygons.size(), 1u);
  EXPECT_EQ(a.polygons[0].label, "car");
  EXPECT_EQ(a.polygons[0].points.size(), 4u);
  EXPECT_EQ(a.width, 200);
  EXPECT_TRUE(a.warnings.empty());
}

TEST(Annotation, EmptyObjectArray) {
  EXPECT_TRUE(owl::parse_annotation(R"({"imgHeight": 10, "imgWidth": 10, "objects": []})").polygons.empty());
}

TEST(Annotation, ExtraKeysIgnored) {
  const auto a = owl::parse_annotation(
      R"({"imgHeight": 10, "imgWidth": 10, "date": "x", "objects": [{"label": "person", "deleted": 0, "id": 3, "polygon": [[0,0],[5,0],[5,5]]}]})");
  EXPECT_EQ(a.polygons.size(), 1u);
}

TEST(Annotation, OutOfBoundsPointsClampedWithWarning) {
  const auto a = owl::parse_annotation(
      R"({"imgHeight": 10, "imgWidth": 20, "objects": [{"label": "car", "polygon": [[-5,2],[25,2],[10,40]]}]})");
  ASSERT_EQ(a.polygons.size(), 1u);
  EXPECT_EQ(a.polygons[0].points[0], (owl::Point{0, 2}));
  EXPECT_EQ(a.polygons[0].points[1], (owl::Point{19, 2}));
  EXPECT_EQ(a.polygons[0].points[2], (owl::Point{10, 9}));
  EXPECT_EQ(a.warnings.size(), 1u);
}

TEST(Annotation, ShortPolygonSkippedWithWarning) {
  const auto a = owl::parse_annotation(
      R"({"imgHeight": 10, "imgWidth": 20, "objects": [{"label": "car", "polygon": [[1,2],[3,4]]}, {"label": "person", "polygon": [[0,0],[4,0],[2,3]]}]})");
  ASSERT_EQ(a.polygons.size(), 1u);
  EXPECT_EQ(a.polygons[0].label, "person");
  ASSERT_EQ(a.warnings.size(), 1u);
  EXPECT_NE(a.warnings[0].find("/objects/0"), std::string::npos);
}

TEST(Annotation, SyntaxErrorsCarryLineAndColumn) {
  try {
    owl::parse_annotation("{\n  \"imgHeight\": 10,\n  \"imgWidth\": ,\n}");
    FAIL();
  } catch (const owl::ParseError& e) {
    EXPECT_EQ(e.location().rfind("line 3", 0), 0u) << e.location();
  }
  EXPECT_THROW(owl::parse_annotation(""), owl::ParseError);
  EXPECT_THROW(owl::parse_annotation("{\"imgHeight\": 10"), owl::ParseError);
}

TEST(Annotation, SchemaErrorsCarryPointer) {
  auto location_of = [](const std::string& doc) {
    try {
      owl::parse_annotation(doc);
    } catch (const owl::ParseError& e) {
      return e.location();
    }
    return std::string("no error");
  };
  EXPECT_EQ(location_of(R"({"imgWidth": 10, "objects": []})"), "/imgHeight");
  EXPECT_EQ(location_of(R"({"imgHeight": 10, "imgWidth": 10})"), "/objects");
  EXPECT_EQ(location_of(R"({"imgHeight": 10, "imgWidth": 10, "objects": {}})"), "/objects");
  EXPECT_EQ(location_of(R"({"imgHeight": 10, "imgWidth": 10, "objects": [{"polygon": []}]})"), "/objects/0/label");
  EXPECT_EQ(location_of(R"({"imgHeight": 10, "imgWidth": 10, "objects": [{"label": "a", "polygon": [[1,1],[2],[3,3]]}]})"),
            "/objects/0/polygon/1");
  EXPECT_EQ(location_of(R"([1, 2])"), "/");
  EXPECT_EQ(location_of(R"({"imgHeight": "ten", "imgWidth": 10, "objects": []})"), "/imgHeight");
}

TEST(Annotation, WriteParseRoundTrip) {
  owl::Annotation a;
  a.width = 50;
  a.height = 40;
  a.polygons = {poly({{1, 1}, {10, 1}, {5, 9}}, "car"), poly({{20, 20}, {30, 20}, {30, 35}, {20, 35}}, "building")};
  const auto b = owl::parse_annotation(owl::write_annotation(a));
  ASSERT_EQ(b.polygons.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(b.polygons[i].label, a.polygons[i].label);
    EXPECT_EQ(b.polygons[i].points, a.polygons[i].points);
  }
}

// ---- cropping and resizing

TEST(Crop, RectangleIsItsOwnBox) {
  owl::Rng rng(1);
  const auto img = random_image(20, 20, rng);
  const auto crop = owl::min_area_crop(img, poly({{2, 3}, {10, 3}, {10, 8}, {2, 8}}));
  EXPECT_EQ(crop.dim(1), 9u);
  EXPECT_EQ(crop.dim(0), 6u);
  EXPECT_EQ(crop.at(0, 0, 0), img.at(3, 2, 0));
  EXPECT_EQ(crop.at(5, 8, 2), img.at(8, 10, 2));
}

TEST(Crop, TriangleBox) {
  owl::Rng rng(2);
  const auto img = random_image(10, 10, rng);
  const auto crop = owl::min_area_crop(img, poly({{0, 0}, {4, 0}, {2, 3}}));
  EXPECT_EQ(crop.dim(1), 5u);
  EXPECT_EQ(crop.dim(0), 4u);
  EXPECT_EQ(crop.at(0, 0, 1), img.at(0, 0, 1));
}

TEST(Crop, TwoHundredRandomPolygonsMatchMinMaxOracle) {
  owl::Rng rng(3);
  const auto img = random_image(40, 50, rng);
  for (int c = 0; c < 200; ++c) {
    std::vector<owl::Point> pts(static_cast<std::size_t>(rng.range(3, 12)));
    for (auto& p : pts) p = {rng.range(0, 49), rng.range(0, 39)};
    const auto b = owl::bounding_box(poly(pts));
    const auto o = oracle::min_max_box(pts);
    ASSERT_EQ(b.x0, o.x0);
    ASSERT_EQ(b.y0, o.y0);
    ASSERT_EQ(b.x1, o.x1);
    ASSERT_EQ(b.y1, o.y1);
    if (o.x1 - o.x0 < 1 || o.y1 - o.y0 < 1) {
      EXPECT_THROW(owl::min_area_crop(img, poly(pts)), owl::CropTooSmall);
      continue;
    }
    const auto crop = owl::min_area_crop(img, poly(pts));
    ASSERT_EQ(crop.dim(0), static_cast<std::size_t>(o.y1 - o.y0 + 1));
    ASSERT_EQ(crop.dim(1), static_cast<std::size_t>(o.x1 - o.x0 + 1));
    for (std::size_t y = 0; y < crop.dim(0); ++y)
      for (std::size_t x = 0; x < crop.dim(1); ++x)
        for (std::size_t ch = 0; ch < 3; ++ch)
          ASSERT_EQ(crop.at(y, x, ch), img.at(y + static_cast<std::size_t>(o.y0), x + static_cast<std::size_t>(o.x0), ch));
  }
}

TEST(Crop, DegenerateAndOutsideRejected) {
  owl::Rng rng(4);
  const auto img = random_image(10, 10, rng);
  EXPECT_THROW(owl::min_area_crop(img, poly({{1, 1}, {1, 5}, {1, 3}})), owl::CropTooSmall);
  EXPECT_THROW(owl::min_area_crop(img, poly({{1, 1}, {12, 5}, {1, 3}})), owl::ParameterError);
}

TEST(Resize, SixtyFourIsNoOp) {
  owl::Rng rng(5);
  const auto img = random_image(64, 64, rng);
  EXPECT_EQ(owl::resize_64(img), img);
  EXPECT_EQ(owl::resize_64(img, owl::ResizeMethod::nearest), img);
}

TEST(Resize, ConstantStaysConstant) {
  owl::Tensor img({7, 13, 3});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = (i % 3 == 0) ? 0.25f : (i % 3 == 1 ? 0.5f : 0.75f);
  const auto out = owl::resize_64(img);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) {
      EXPECT_FLOAT_EQ(out.at(y, x, 0), 0.25f);
      EXPECT_FLOAT_EQ(out.at(y, x, 2), 0.75f);
    }
}

TEST(Resize, CheckerboardMatchesScalarBilinear) {
  owl::Tensor img({4, 4, 3});
  std::vector<double> ref(48);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = (x + y) % 2 ? 1.0 : 0.0;
        img.at(y, x, c) = static_cast<float>(v);
        ref[(y * 4 + x) * 3 + c] = v;
      }
  const auto out = owl::resize_64(img);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) ASSERT_NEAR(out.at(y, x, c), oracle::bilinear(ref, 4, 4, 3, 64, 64, y, x, c), 1e-6);
}

TEST(Resize, TwoHundredRandomCropsMatchScalarBilinear) {
  owl::Rng rng(6);
  for (int c = 0; c < 200; ++c) {
    const int h = rng.range(2, 40), w = rng.range(2, 40);
    const auto img = random_image(h, w, rng);
    const std::vector<double> ref(img.storage().begin(), img.storage().end());
    const auto out = owl::resize_64(img);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        for (int ch = 0; ch < 3; ++ch)
          ASSERT_NEAR(out.at(y, x, ch), oracle::bilinear(ref, h, w, 3, 64, 64, y, x, ch), 1e-6);
  }
}

TEST(Resize, TooSmallRejected) {
  owl::Tensor img({1, 5, 3});
  EXPECT_THROW(owl::resize_64(img), owl::ParameterError);
}

// ---- images

TEST(Image, PpmAndPngRoundTrip) {
  owl::RgbImage img(17, 9);
  owl::Rng rng(7);
  for (auto& b : img.pixels) b = static_cast<std::uint8_t>(rng.below(256));
  EXPECT_EQ(owl::decode_ppm(owl::encode_ppm(img)).pixels, img.pixels);
  const auto png = owl::decode_png(owl::encode_png(img));
  EXPECT_EQ(png.width, 17u);
  EXPECT_EQ(png.pixels, img.pixels);
  EXPECT_THROW(owl::decode_ppm({'P', '3'}), owl::FormatError);
  EXPECT_THROW(owl::decode_png({1, 2, 3}), owl::FormatError);
}

TEST(Image, TensorConversionNormalises) {
  owl::RgbImage img(2, 1);
  img.pixels = {0, 255, 51, 102, 204, 255};
  const auto t = owl::to_tensor(img);
  EXPECT_FLOAT_EQ(t.at(0, 0, 1), 1.0f);
  EXPECT_FLOAT_EQ(t.at(0, 0, 2), 0.2f);
  EXPECT_EQ(owl::from_tensor(t).pixels, img.pixels);
}

// ---- partitions

TEST(Partition, FifteenFiveOfTwenty) {
  std::vector<std::string> cities;
  for (int i = 0; i < 20; ++i) cities.push_back("c" + std::to_string(i));
  const auto p = owl::partition_cities(cities, 15, 5, 3);
  EXPECT_EQ(p.train_cities.size(), 15u);
  EXPECT_EQ(p.test_cities.size(), 5u);
  std::set<std::string> all(p.train_cities.begin(), p.train_cities.end());
  for (const auto& c : p.test_cities) EXPECT_TRUE(all.insert(c).second);
  EXPECT_EQ(all.size(), 20u);
  const auto q = owl::partition_cities(cities, 15, 5, 3);
  EXPECT_EQ(p.train_cities, q.train_cities);
  EXPECT_EQ(p.test_cities, q.test_cities);
}

TEST(Partition, MinimalAndInsufficient) {
  const auto p = owl::partition_cities({"a", "b"}, 1, 1, 9);
  EXPECT_NE(p.train_cities[0], p.test_cities[0]);
  EXPECT_THROW(owl::partition_cities({"a", "b"}, 2, 1, 9), owl::ParameterError);
}

TEST(SplitMembers, HundredIntoFiveWithTwentyWithheld) {
  const auto store = small_store(100, 1);
  const auto s = owl::split_members(store, 5, 0.2, 4);
  ASSERT_EQ(s.members.size(), 5u);
  for (const auto& m : s.members) EXPECT_EQ(m.size(), 16u);
  EXPECT_EQ(s.stacking.size(), 20u);
}

TEST(SplitMembers, PreconditionsEnforced) {
  const auto store = small_store(10, 1);
  EXPECT_THROW(owl::split_members(store, 1, 0.2, 1), owl::ParameterError);
  EXPECT_THROW(owl::split_members(store, 6, 0.2, 1), owl::ParameterError);
  EXPECT_THROW(owl::split_members(store, 2, 1.0, 1), owl::ParameterError);
}

TEST(SplitMembers, DisjointUnionAndBalancedForManySeeds) {
  for (std::size_t n : {4u, 7u, 31u, 100u}) {
    const auto store = small_store(n, n);
    const auto keys = store.provenance_keys();
    for (std::size_t members : {2u, 3u}) {
      if (n < 2 * members) continue;
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = owl::split_members(store, members, 0.2, seed);
        std::multiset<std::string> seen;
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& m : s.members) {
          lo = std::min(lo, m.size());
          hi = std::max(hi, m.size());
          for (const auto& smp : m.samples) seen.insert(smp.provenance.key());
        }
        for (const auto& smp : s.stacking.samples) seen.insert(smp.provenance.key());
        EXPECT_LE(hi - lo, 1u);
        EXPECT_EQ(seen.size(), keys.size());
        EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()), keys);
      }
    }
  }
}

// ---- crop store

TEST(CropStore, RoundTripIsBitExact) {
  const auto store = small_store(25, 2);
  const auto bytes = owl::serialize_store(store);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "OWC1");
  const auto back = owl::deserialize_store(bytes);
  EXPECT_EQ(back, store);
  EXPECT_EQ(owl::serialize_store(back), bytes);
  const auto dir = scratch("store");
  owl::save_store(store, (dir / "s.owc").string());
  EXPECT_EQ(owl::load_store((dir / "s.owc").string()), store);
  fs::remove_all(dir);
}

TEST(CropStore, MalformedRejected) {
  auto bytes = owl::serialize_store(small_store(3, 3));
  auto bad = bytes;
  bad[1] = 'X';
  EXPECT_THROW(owl::deserialize_store(bad), owl::FormatError);
  auto cut = bytes;
  cut.resize(cut.size() - 100);
  EXPECT_THROW(owl::deserialize_store(cut), owl::FormatError);
  EXPECT_THROW(owl::load_store("/nonexistent/x.owc"), owl::IoError);
}

TEST(CropStore, ValidateCatchesBadLabel) {
  auto store = small_store(3, 3);
  store.samples[1].label_id = 7;
  EXPECT_THROW(store.validate(), owl::ParameterError);
}

TEST(CropStore, SubsetsKeepLabelSet) {
  const auto store = small_store(40, 5);
  const auto some = store.with_cities({"city1", "city2"});
  for (const auto& s : some.samples) EXPECT_TRUE(s.provenance.city == "city1" || s.provenance.city == "city2");
  EXPECT_EQ(some.labels, store.labels);
  const auto cars = store.with_labels({"car"});
  for (const auto& s : cars.samples) EXPECT_EQ(s.label_id, 0);
  EXPECT_EQ(store.cities().size(), 4u);
}

TEST(LabelSet, AppendOnlyIndicesStable) {
  owl::LabelSet ls({"car", "person"});
  EXPECT_EQ(ls.add("person"), 1u);
  EXPECT_EQ(ls.add("building"), 2u);
  EXPECT_THROW(ls.append_new("car"), owl::ParameterError);
  EXPECT_EQ(ls.index("car"), 0u);
  EXPECT_THROW(ls.index("tree"), owl::ParameterError);
  EXPECT_EQ(ls.name(2), "building");
}

// ---- synthetic data and ingestion

TEST(Synth, ConfigValidated) {
  owl::SynthConfig c;
  c.classes = {};
  EXPECT_THROW(c.validate(), owl::ParameterError);
  c.classes = {"car", "car"};
  EXPECT_THROW(c.validate(), owl::ParameterError);
  c.classes = {"car"};
  c.per_class = 0;
  EXPECT_THROW(c.validate(), owl::ParameterError);
}

TEST(Synth, TwentyObjectDocumentRoundTrips) {
  owl::SynthConfig c;
  c.classes = {"car", "person", "traffic_sign", "building"};
  c.per_class = 5;
  c.cities = 1;
  c.images_per_city = 1;
  const auto scenes = owl::synth_scenes(c);
  ASSERT_EQ(scenes.size(), 1u);
  const auto parsed = owl::parse_annotation(owl::write_annotation(scenes[0].annotation));
  ASSERT_EQ(parsed.polygons.size(), 20u);
  EXPECT_TRUE(parsed.warnings.empty());
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(parsed.polygons[i].label, scenes[0].annotation.polygons[i].label);
    EXPECT_EQ(parsed.polygons[i].points, scenes[0].annotation.polygons[i].points);
  }
}

TEST(Synth, TwoClassesFiftyEachIngestToHundredSamples) {
  const auto dir = scratch("synth");
  owl::SynthConfig c;
  EXPECT_EQ(owl::synth_generate(c, dir.string()), 200u);
  EXPECT_TRUE(fs::exists(dir / "city00" / "city00_000000.ppm"));
  EXPECT_TRUE(fs::exists(dir / "city00" / "city00_000000_polygons.json"));
  owl::IngestStats stats;
  std::vector<std::string> warnings;
  owl::IngestOptions opt;
  opt.warn = [&](const std::string& w) { warnings.push_back(w); };
  const auto store = owl::ingest_directory(dir.string(), opt, &stats);
  EXPECT_EQ(store.size(), 100u);
  EXPECT_EQ(store.labels.names(), (std::vector<std::string>{"car", "person"}) );
  EXPECT_EQ(store.class_counts(), (std::vector<std::size_t>{50, 50}));
  EXPECT_EQ(stats.images, 200u);
  EXPECT_EQ(store.cities().size(), 20u);
  EXPECT_TRUE(warnings.empty());

  // Same inputs, same store.
  const auto again = owl::ingest_directory(dir.string(), opt);
  EXPECT_EQ(owl::serialize_store(again), owl::serialize_store(store));
  fs::remove_all(dir);
}

TEST(Synth, SameSeedByteIdenticalDataset) {
  owl::SynthConfig c;
  c.cities = 2;
  c.images_per_city = 3;
  c.per_class = 6;
  const auto a = scratch("synth_a"), b = scratch("synth_b");
  owl::synth_generate(c, a.string());
  owl::synth_generate(c, b.string());
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(owl::read_file_bytes(e.path().string()), owl::read_file_bytes((b / rel).string())) << rel;
  }
  EXPECT_EQ(files, 12u);
  c.seed = 2;
  const auto other = owl::synth_scenes(c);
  EXPECT_NE(other[0].image.pixels, owl::synth_scenes([] {
              owl::SynthConfig d;
              d.cities = 2;
              d.images_per_city = 3;
              d.per_class = 6;
              return d;
            }())[0].image.pixels);
  fs::remove_all(a);
  fs::remove_all(b);
}

namespace {

void learnability(const std::vector<std::string>& classes, std::size_t per_class, double floor) {
  owl::SynthConfig c;
  c.classes = classes;
  c.per_class = per_class;
  c.seed = 17;
  const auto scenes = owl::synth_scenes(c);
  std::vector<std::vector<double>> trx, tex;
  std::vector<int> try_, tey;
  owl::IngestOptions opt;
  for (const auto& sc : scenes) {
    std::vector<std::size_t> kept;
    const auto crops = owl::crops_from_image(sc.image, sc.annotation, opt, kept);
    const bool test = sc.city >= "city15";
    for (std::size_t k = 0; k < crops.size(); ++k) {
      const auto& label = sc.annotation.polygons[kept[k]].label;
      const int y = static_cast<int>(std::find(classes.begin(), classes.end(), label) - classes.begin());
      (test ? tex : trx).push_back(oracle::pixel_features(crops[k]));
      (test ? tey : try_).push_back(y);
    }
  }
  ASSERT_FALSE(tex.empty());
  const double acc = oracle::nearest_centroid_accuracy(trx, try_, tex, tey, static_cast<int>(classes.size()));
  EXPECT_GE(acc, floor) << classes.size() << " classes";
}

}  // namespace

TEST(Synth, NearestCentroidSeparatesTwoClasses) { learnability({"car", "person"}, 200, 0.9); }

TEST(Synth, NearestCentroidSeparatesSixClasses) { learnability(owl::street_classes(), 100, 0.9); }

TEST(Ingest, ClassFilterAndMinimumSize) {
  owl::RgbImage img(40, 40, 100);
  owl::Annotation ann;
  ann.width = ann.height = 40;
  ann.polygons = {poly({{0, 0}, {20, 0}, {20, 20}, {0, 20}}, "car"), poly({{0, 0}, {8, 0}, {8, 30}}, "person"),
                  poly({{5, 5}, {30, 5}, {30, 30}}, "tree")};
  owl::IngestOptions opt;
  opt.classes = {"car", "person"};
  owl::IngestStats stats;
  std::vector<std::size_t> kept;
  const auto crops = owl::crops_from_image(img, ann, opt, kept, &stats);
  EXPECT_EQ(kept, (std::vector<std::size_t>{0}));
  EXPECT_EQ(stats.too_small, 1u);
  EXPECT_EQ(stats.filtered_label, 1u);
  ASSERT_EQ(crops.size(), 1u);
  EXPECT_EQ(crops[0].shape(), (owl::Shape{64, 64, 3}));
}

TEST(Ingest, MissingRootAndBadDocumentReported) {
  EXPECT_THROW(owl::ingest_directory("/nonexistent/root"), owl::IoError);
  const auto dir = scratch("bad_ingest");
  fs::create_directories(dir / "c1");
  owl::write_image(owl::RgbImage(20, 20), (dir / "c1" / "a.ppm").string());
  const std::string doc = "{ \"imgHeight\": 20,\n \"imgWidth\": oops }";
  owl::write_file_bytes((dir / "c1" / "a_polygons.json").string(), std::vector<std::uint8_t>(doc.begin(), doc.end()));
  try {
    owl::ingest_directory(dir.string());
    FAIL();
  } catch (const owl::IoError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}
