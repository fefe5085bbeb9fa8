#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hiprobe/dataset.hpp"
#include "hiprobe/error.hpp"
#include "oracles.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

using namespace hiprobe;
namespace fs = std::filesystem;

namespace {

Manifest make_manifest(std::uint32_t layers, std::uint32_t dim) {
  Manifest m;
  m.model_name = "unit-test";
  m.num_layers = layers;
  m.hidden_dim = dim;
  m.created_utc = "2026-01-01T00:00:00Z";
  return m;
}

// Any finite float, drawn from the raw bit space so round-trips check every bit.
float random_finite_float(std::mt19937_64& rng) {
  while (true) {
    const auto bits = static_cast<std::uint32_t>(rng());
    const float f = std::bit_cast<float>(bits);
    if (std::isfinite(f)) return f;
  }
}

std::vector<Record> random_records(std::mt19937_64& rng, std::size_t count, std::size_t width) {
  std::vector<Record> out(count);
  const Label labels[3] = {Label::normal, Label::anomalous, Label::unlabeled};
  for (auto& r : out) {
    r.label = labels[rng() % 3];
    r.video_id = static_cast<std::uint32_t>(rng());
    r.frame_index = static_cast<std::uint32_t>(rng());
    r.values.resize(width);
    for (auto& v : r.values) v = random_finite_float(rng);
  }
  return out;
}

bool bit_equal(const std::vector<Record>& a, const std::vector<Record>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].label != b[i].label || a[i].video_id != b[i].video_id ||
        a[i].frame_index != b[i].frame_index || a[i].values.size() != b[i].values.size()) {
      return false;
    }
    if (std::memcmp(a[i].values.data(), b[i].values.data(), a[i].values.size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<Record> labeled(std::size_t normal, std::size_t anomalous, std::size_t width = 3) {
  std::vector<Record> out;
  for (std::size_t i = 0; i < normal + anomalous; ++i) {
    Record r;
    r.label = i < normal ? Label::normal : Label::anomalous;
    r.video_id = static_cast<std::uint32_t>(i);
    r.values.assign(width, static_cast<float>(i));
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("empty dump is header only and reads back empty") {
  const auto dir = oracle::scratch_dir("empty");
  const auto path = dir / "empty.hsd";
  const auto bytes = dataset::write_dump({}, make_manifest(2, 3), path);
  CHECK(bytes == dataset::kHeaderSize);
  CHECK(fs::file_size(path) == dataset::kHeaderSize);
  const Dump back = dataset::read_dump(path);
  CHECK(back.records.empty());
  CHECK(back.manifest.num_layers == 2);
  CHECK(back.manifest.hidden_dim == 3);
  fs::remove_all(dir);
}

TEST_CASE("header layout is little-endian HSD1") {
  const auto dir = oracle::scratch_dir("layout");
  const auto path = dir / "one.hsd";
  Record r;
  r.label = Label::anomalous;
  r.video_id = 0x01020304;
  r.frame_index = 7;
  r.values = {1.0f, -2.5f};
  dataset::write_dump(std::vector<Record>{r}, make_manifest(1, 2), path);
  const auto bytes = slurp(path);
  REQUIRE(bytes.size() == dataset::kHeaderSize + dataset::record_size(1, 2));
  CHECK(std::string(bytes.data(), 4) == "HSD1");
  CHECK(bytes[4] == 1);   // version
  CHECK(bytes[8] == 1);   // L
  CHECK(bytes[12] == 2);  // D
  CHECK(bytes[16] == 1);  // N
  CHECK(bytes[24] == 1);  // dtype f32
  CHECK(bytes[25] == 1);  // label
  CHECK(static_cast<unsigned char>(bytes[26]) == 0x04);
  CHECK(static_cast<unsigned char>(bytes[29]) == 0x01);

  const Dump back = dataset::read_dump(path);
  CHECK(bit_equal(back.records, {r}));
  fs::remove_all(dir);
}

TEST_CASE("manifest sidecar carries the snake_case fields") {
  const auto dir = oracle::scratch_dir("manifest");
  const auto path = dir / "m.hsd";
  Manifest m = make_manifest(4, 5);
  m.label_scheme = LabelScheme::frame_level;
  m.sampling_k = 8;
  m.segment_len = 24;
  dataset::write_dump({}, m, path);
  std::ifstream in(dataset::manifest_path(path));
  const auto j = nlohmann::json::parse(in);
  for (const char* key : {"format_version", "model_name", "num_layers", "hidden_dim", "sampling_k",
                          "segment_len", "label_scheme", "created_utc"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  CHECK(j["label_scheme"] == "frame_level");
  const Dump back = dataset::read_dump(path);
  CHECK(back.manifest.model_name == "unit-test");
  CHECK(back.manifest.label_scheme == LabelScheme::frame_level);
  CHECK(back.manifest.created_utc == m.created_utc);
  fs::remove_all(dir);
}

TEST_CASE("random payloads round-trip bit-exactly and file size follows the header") {
  std::mt19937_64 rng(42);
  const auto dir = oracle::scratch_dir("roundtrip");
  for (int trial = 0; trial < 100; ++trial) {
    const auto layers = static_cast<std::uint32_t>(1 + rng() % 4);
    const auto dim = static_cast<std::uint32_t>(1 + rng() % 7);
    const auto records = random_records(rng, rng() % 20, std::size_t{layers} * dim);
    const auto path = dir / "r.hsd";
    dataset::write_dump(records, make_manifest(layers, dim), path);
    CHECK(fs::file_size(path) == dataset::kHeaderSize + records.size() * dataset::record_size(layers, dim));
    CHECK(bit_equal(dataset::read_dump(path).records, records));
  }
  fs::remove_all(dir);
}

TEST_CASE("read_dump rejects corrupt files with the right error class") {
  const auto dir = oracle::scratch_dir("corrupt");
  const auto path = dir / "c.hsd";
  std::mt19937_64 rng(3);
  const auto records = random_records(rng, 5, 6);
  dataset::write_dump(records, make_manifest(2, 3), path);
  const auto good = slurp(path);

  SUBCASE("bad magic") {
    auto bytes = good;
    bytes[0] = 'X';
    spit(path, bytes);
    CHECK_THROWS_AS(dataset::read_dump(path), FormatError);
  }
  SUBCASE("bad version") {
    auto bytes = good;
    bytes[4] = 2;
    spit(path, bytes);
    CHECK_THROWS_AS(dataset::read_dump(path), FormatError);
  }
  SUBCASE("bad dtype") {
    auto bytes = good;
    bytes[24] = 2;
    spit(path, bytes);
    CHECK_THROWS_AS(dataset::read_dump(path), FormatError);
  }
  SUBCASE("truncated header") {
    spit(path, std::vector<char>(good.begin(), good.begin() + 10));
    CHECK_THROWS_AS(dataset::read_dump(path), TruncationError);
  }
  SUBCASE("truncated mid-record names the record") {
    const std::size_t rs = dataset::record_size(2, 3);
    spit(path, std::vector<char>(good.begin(), good.begin() + static_cast<long>(dataset::kHeaderSize + 3 * rs + 5)));
    try {
      dataset::read_dump(path);
      FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
      CHECK(e.record_index() == 3);
      CHECK(std::string(e.what()).find("record 3") != std::string::npos);
    }
  }
  SUBCASE("trailing bytes") {
    auto bytes = good;
    bytes.push_back(0);
    spit(path, bytes);
    CHECK_THROWS_AS(dataset::read_dump(path), FormatError);
  }
  SUBCASE("non-finite value reports its record") {
    auto bytes = good;
    const std::size_t offset = dataset::kHeaderSize + 2 * dataset::record_size(2, 3) + 9;
    const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
    std::memcpy(bytes.data() + offset, &nan_bits, 4);
    spit(path, bytes);
    try {
      dataset::read_dump(path);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.record_index() == 2);
    }
  }
  SUBCASE("invalid label") {
    auto bytes = good;
    bytes[dataset::kHeaderSize] = 7;
    spit(path, bytes);
    CHECK_THROWS_AS(dataset::read_dump(path), DataError);
  }
  SUBCASE("manifest disagreeing with header") {
    std::ofstream(dataset::manifest_path(path)) << nlohmann::json{
        {"format_version", 1}, {"model_name", "x"}, {"num_layers", 3}, {"hidden_dim", 2},
        {"sampling_k", 8}, {"segment_len", 24}, {"label_scheme", "video_level"},
        {"created_utc", ""}}.dump();
    CHECK_THROWS_AS(dataset::read_dump(path), FormatError);
  }
  SUBCASE("missing manifest") {
    fs::remove(dataset::manifest_path(path));
    CHECK_THROWS_AS(dataset::read_dump(path), IoError);
    CHECK(dataset::read_dump_binary(path).records.size() == 5);
  }
  SUBCASE("missing dump") {
    CHECK_THROWS_AS(dataset::read_dump(dir / "nope.hsd"), IoError);
  }
  fs::remove_all(dir);
}

TEST_CASE("write_dump checks dimensions") {
  const auto dir = oracle::scratch_dir("dims");
  auto records = labeled(1, 1, 5);
  CHECK_THROWS_AS(dataset::write_dump(records, make_manifest(2, 3), dir / "x.hsd"), DimensionError);
  Manifest bad = make_manifest(1, 5);
  bad.sampling_k = 30;
  CHECK_THROWS_AS(dataset::write_dump(records, bad, dir / "x.hsd"), DimensionError);
  CHECK_THROWS_AS(dataset::write_dump(labeled(1, 1, 6), make_manifest(2, 3), dir / "missing" / "x.hsd"),
                  IoError);
  fs::remove_all(dir);
}

TEST_CASE("stratified_subset rounding, floor of one, identity and determinism") {
  const auto records = labeled(100, 100);
  const auto tiny = dataset::stratified_subset(records, 0.01, 5);
  CHECK(std::count_if(tiny.begin(), tiny.end(), [](const Record& r) { return r.label == Label::normal; }) == 1);
  CHECK(std::count_if(tiny.begin(), tiny.end(), [](const Record& r) { return r.label == Label::anomalous; }) == 1);

  const auto all = dataset::stratified_subset(records, 1.0, 5);
  REQUIRE(all.size() == records.size());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].video_id == records[i].video_id);

  const auto a = dataset::stratified_subset(records, 0.3, 11);
  const auto b = dataset::stratified_subset(records, 0.3, 11);
  REQUIRE(a.size() == 60);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].video_id == b[i].video_id);

  // 10 * 0.25 = 2.5 rounds half up to 3; 3 * 0.01 rounds to 0 and is floored at 1.
  const auto half = dataset::stratified_subset(labeled(10, 3), 0.25, 0);
  CHECK(std::count_if(half.begin(), half.end(), [](const Record& r) { return r.label == Label::normal; }) == 3);
  CHECK(std::count_if(half.begin(), half.end(), [](const Record& r) { return r.label == Label::anomalous; }) == 1);

  // Only one class present.
  CHECK(dataset::stratified_subset(labeled(10, 0), 0.5, 0).size() == 5);
}

TEST_CASE("stratified_subset selects the same identities under any input order") {
  std::mt19937_64 rng(9);
  auto records = labeled(37, 23);
  std::set<std::uint32_t> reference;
  for (const auto& r : dataset::stratified_subset(records, 0.2, 77)) reference.insert(r.video_id);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(records.begin(), records.end(), rng);
    std::set<std::uint32_t> got;
    for (const auto& r : dataset::stratified_subset(records, 0.2, 77)) got.insert(r.video_id);
    CHECK(got == reference);
  }
  std::set<std::uint32_t> other;
  for (const auto& r : dataset::stratified_subset(records, 0.2, 78)) other.insert(r.video_id);
  CHECK(other != reference);
}

TEST_CASE("stratified_subset errors") {
  CHECK_THROWS_AS(dataset::stratified_subset({}, 0.5, 0), EmptyDatasetError);
  CHECK_THROWS_AS(dataset::stratified_subset(labeled(2, 2), 0.0, 0), UsageError);
  CHECK_THROWS_AS(dataset::stratified_subset(labeled(2, 2), 1.5, 0), UsageError);
  auto records = labeled(2, 2);
  records[1].label = Label::unlabeled;
  CHECK_THROWS_AS(dataset::stratified_subset(records, 0.5, 0), DataError);
}

TEST_CASE("sequences_at_layer groups, orders and slices") {
  Dump dump;
  dump.manifest = make_manifest(2, 2);
  auto add = [&](std::uint32_t video, std::uint32_t frame, float base) {
    Record r;
    r.video_id = video;
    r.frame_index = frame;
    r.values = {base, base + 1, base + 2, base + 3};
    dump.records.push_back(r);
  };
  add(5, 6, 60);
  add(2, 3, 30);
  add(5, 0, 0);
  add(2, 0, 0);
  add(5, 3, 30);
  const auto seqs = dataset::sequences_at_layer(dump, 1);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].video_id == 2);
  CHECK(seqs[1].video_id == 5);
  CHECK(seqs[1].frame_indices == std::vector<std::uint32_t>{0, 3, 6});
  CHECK(seqs[1].features(2, 0) == doctest::Approx(62.0));
  CHECK(seqs[1].features(2, 1) == doctest::Approx(63.0));

  CHECK_THROWS_AS(dataset::sequences_at_layer(dump, 2), DimensionError);
  add(2, 3, 1);
  CHECK_THROWS_AS(dataset::sequences_at_layer(dump, 0), DataError);
}

TEST_CASE("annotations label whole videos") {
  const auto dir = oracle::scratch_dir("annotations");
  const auto path = dir / "labels.json";
  std::ofstream(path) << R"({"3": 1, "7": "normal", "9": "anomalous", "11": 0})";
  const auto labels = dataset::read_annotations(path);
  CHECK(labels.size() == 4);
  CHECK(labels.at(3) == Label::anomalous);
  CHECK(labels.at(7) == Label::normal);

  auto records = labeled(2, 0);
  records[0].video_id = 3;
  records[1].video_id = 11;
  dataset::apply_annotations(records, labels);
  CHECK(records[0].label == Label::anomalous);
  CHECK(records[1].label == Label::normal);
  records[1].video_id = 4;
  CHECK_THROWS_AS(dataset::apply_annotations(records, labels), DataError);

  std::ofstream(path, std::ios::trunc) << R"({"x1": 1})";
  CHECK_THROWS_AS(dataset::read_annotations(path), FormatError);
  std::ofstream(path, std::ios::trunc) << R"({"1": 2})";
  CHECK_THROWS_AS(dataset::read_annotations(path), FormatError);
  std::ofstream(path, std::ios::trunc) << "[1, 2]";
  CHECK_THROWS_AS(dataset::read_annotations(path), FormatError);
  CHECK_THROWS_AS(dataset::read_annotations(dir / "missing.json"), IoError);
  fs::remove_all(dir);
}
