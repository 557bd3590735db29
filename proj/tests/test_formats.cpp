#include <cstring>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"

#include "cshift/error.hpp"
#include "cshift/formats.hpp"
#include "cshift/hash.hpp"
#include "cshift/manifest.hpp"
#include "cshift/shift.hpp"
#include "test_util.hpp"

using namespace cshift;

namespace {

using Bytes = std::vector<std::uint8_t>;

void put_u32(Bytes& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(Bytes& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f32(Bytes& b, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(b, u);
}
void put_f64(Bytes& b, double f) {
  std::uint64_t u;
  std::memcpy(&u, &f, 8);
  put_u64(b, u);
}
void set_u32(Bytes& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void set_u64(Bytes& b, std::size_t at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// Byte layout assembled by hand from the format description.
Bytes hand_cslt(std::uint32_t d, const std::vector<std::uint16_t>& labels, const std::vector<float>& values,
                std::uint64_t seed, std::uint8_t family, double param) {
  Bytes b{'C', 'S', 'L', 'T'};
  put_u32(b, 1);
  put_u32(b, 1);
  put_u32(b, d);
  put_u64(b, labels.size());
  put_u64(b, seed);
  b.push_back(family);
  put_f64(b, param);
  for (auto l : labels) {
    b.push_back(static_cast<std::uint8_t>(l));
    b.push_back(static_cast<std::uint8_t>(l >> 8));
  }
  for (float v : values) put_f32(b, v);
  return b;
}

Bytes hand_csim(std::uint32_t h, std::uint32_t w, std::uint32_t c, const std::vector<std::uint16_t>& labels,
                const std::vector<float>& values) {
  Bytes b{'C', 'S', 'I', 'M'};
  put_u32(b, 1);
  put_u32(b, h);
  put_u32(b, w);
  put_u32(b, c);
  put_u64(b, labels.size());
  for (auto l : labels) {
    b.push_back(static_cast<std::uint8_t>(l));
    b.push_back(static_cast<std::uint8_t>(l >> 8));
  }
  for (float v : values) put_f32(b, v);
  return b;
}

template <typename F>
ParseError expect_parse_error(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("no ParseError thrown");
  return ParseError(0, "", "");
}

Dataset random_images(std::mt19937_64& rng, std::size_t n) {
  return Dataset({16, 16, 3}, testutil::random_floats(rng, n * 768, 0.0f, 1.0f),
                 std::vector<Label>(n, 1));
}

}  // namespace

TEST_CASE("CSLT round trip of a 100 x 8 batch is bitwise equal") {
  const auto t = derive_targets(3, 8);
  const auto batch = sample_shifted_batch(ShiftSpec::overlap(0.6, t), 100, 42, 5, LabelRule::round_robin(3));
  const auto bytes = encode_latents(batch);
  CHECK(bytes.size() == kLatentHeaderBytes + 100 * 2 + 100 * 8 * 4);
  const auto file = decode_latents(bytes);
  CHECK(file.header.dim == 8);
  CHECK(file.header.count == 100);
  CHECK(file.header.seed == 42);
  CHECK(file.header.family == ShiftFamily::overlap);
  CHECK(file.header.shift_parameter == 0.6);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(file.batch.label(i) == batch.batch.label(i));
    for (std::size_t k = 0; k < 8; ++k) {
      REQUIRE(file.batch.code(i)[k] == static_cast<double>(static_cast<float>(batch.batch.code(i)[k])));
    }
  }
  CHECK(encode_latents(file.header, file.batch) == bytes);
}

TEST_CASE("CSLT layout matches a hand-built byte oracle") {
  LatentFileHeader h;
  h.dim = 2;
  h.count = 2;
  h.seed = 0x0102030405060708ull;
  h.family = ShiftFamily::truncation;
  h.shift_parameter = 1.25;
  LatentBatch batch(2, 2, h.seed, 0);
  batch.set_label(0, 7);
  batch.set_label(1, 300);
  const std::vector<double> vals{0.5, -1.0, 2.0, 0.25};
  std::copy(vals.begin(), vals.end(), batch.values().begin());
  const Bytes want = hand_cslt(2, {7, 300}, {0.5f, -1.0f, 2.0f, 0.25f}, h.seed, 3, 1.25);
  CHECK(encode_latents(h, batch) == want);
  CHECK(want[32] == 3);
  CHECK(want[41] == 7);
  CHECK(want[43] == 44);  // 300 = 0x012c
  CHECK(want[44] == 1);
  CHECK(decode_latents(want).header == h);
}

TEST_CASE("CSIM round trip and layout") {
  std::mt19937_64 rng(1);
  const auto images = random_images(rng, 4);
  const auto bytes = encode_images(images);
  CHECK(bytes.size() == kImageHeaderBytes + 4 * 2 + 4 * 768 * 4);
  CHECK(decode_images(bytes) == images);
  CHECK(encode_images(decode_images(bytes)) == bytes);

  const Dataset tiny({1, 2, 1}, {0.0f, 1.0f}, {5});
  CHECK(encode_images(tiny) == hand_csim(1, 2, 1, {5}, {0.0f, 1.0f}));
}

TEST_CASE("bad magic is rejected at offset 0") {
  auto bytes = hand_cslt(2, {0}, {1.0f, 2.0f}, 0, 0, 0.0);
  bytes[0] = 'X';
  const auto e = expect_parse_error([&] { decode_latents(bytes); });
  CHECK(e.rule() == "bad_magic");
  CHECK(e.offset() == 0);
  CHECK(e.kind() == ErrorKind::parse);
  CHECK(expect_parse_error([&] { detect_format(bytes); }).rule() == "bad_magic");
  CHECK(expect_parse_error([&] { decode_images(hand_cslt(2, {0}, {1, 2}, 0, 0, 0.0)); }).rule() == "bad_magic");
}

TEST_CASE("declared n larger than the payload is a length mismatch") {
  const std::vector<std::uint16_t> labels(10, 0);
  auto bytes = hand_cslt(3, labels, std::vector<float>(27, 0.5f), 0, 0, 0.0);
  const auto e = expect_parse_error([&] { decode_latents(bytes); });
  CHECK(e.rule() == "length_mismatch");
  CHECK(e.offset() == bytes.size());

  auto img = hand_csim(2, 2, 1, {0, 0}, std::vector<float>(8, 0.5f));
  img.push_back(0);
  CHECK(expect_parse_error([&] { decode_images(img); }).rule() == "length_mismatch");

  // A count that overflows the size computation is caught, not wrapped.
  auto huge = hand_csim(2, 2, 1, {0}, std::vector<float>(4, 0.5f));
  set_u64(huge, 20, std::numeric_limits<std::uint64_t>::max() / 2);
  CHECK(expect_parse_error([&] { decode_images(huge); }).rule() == "length_mismatch");
}

TEST_CASE("zero image extents are invalid shapes") {
  auto bytes = hand_csim(2, 2, 1, {0}, std::vector<float>(4, 0.5f));
  set_u32(bytes, 16, 0);
  auto e = expect_parse_error([&] { decode_images(bytes); });
  CHECK(e.rule() == "invalid_shape");
  CHECK(e.offset() == 16);
  set_u32(bytes, 16, 1);
  set_u32(bytes, 8, 0);
  e = expect_parse_error([&] { decode_images(bytes); });
  CHECK(e.offset() == 8);
}

TEST_CASE("header field rules name their offsets") {
  const auto base = hand_cslt(2, {0}, {1.0f, 2.0f}, 0, 2, 0.5);
  REQUIRE_NOTHROW(decode_latents(base));
  struct Case {
    std::size_t at;
    std::uint32_t value;
    const char* rule;
  };
  for (const Case c : {Case{4, 2, "unsupported_version"}, Case{8, 2, "unsupported_dtype"},
                       Case{12, 1, "invalid_dimension"}}) {
    auto b = base;
    set_u32(b, c.at, c.value);
    const auto e = expect_parse_error([&] { decode_latents(b); });
    CHECK(e.rule() == c.rule);
    CHECK(e.offset() == c.at);
  }
  auto b = base;
  b[32] = 9;
  CHECK(expect_parse_error([&] { decode_latents(b); }).rule() == "bad_family");
  b = hand_cslt(2, {0}, {1.0f, 2.0f}, 0, 2, 2.0);
  CHECK(expect_parse_error([&] { decode_latents(b); }).rule() == "invalid_parameter");
  b = hand_cslt(2, {0}, {1.0f, 2.0f}, 0, 3, std::numeric_limits<double>::infinity());
  CHECK(expect_parse_error([&] { decode_latents(b); }).rule() == "non_finite_parameter");

  for (std::size_t len : {0u, 3u, 20u, 40u}) {
    const Bytes cut(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(len));
    const auto e = expect_parse_error([&] { decode_latents(cut); });
    CHECK(e.rule() == "truncated_header");
    CHECK(e.offset() == len);
  }
  auto img = hand_csim(1, 1, 1, {0}, {0.5f});
  set_u32(img, 4, 0);
  CHECK(expect_parse_error([&] { decode_images(img); }).rule() == "unsupported_version");
}

TEST_CASE("non-finite and out-of-range payload values") {
  const auto nan = std::numeric_limits<float>::quiet_NaN();
  const auto e = expect_parse_error([&] { decode_latents(hand_cslt(2, {0, 0}, {1, 2, 3, nan}, 0, 0, 0.0)); });
  CHECK(e.rule() == "non_finite_value");
  CHECK(e.offset() == kLatentHeaderBytes + 4 + 12);
  const auto f = expect_parse_error([&] { decode_images(hand_csim(1, 1, 2, {0}, {0.5f, 1.5f})); });
  CHECK(f.rule() == "value_out_of_range");
  CHECK(f.offset() == kImageHeaderBytes + 2 + 4);
}

TEST_CASE("out-of-range pixels are clamped on write and counted") {
  testutil::TempDir dir("formats");
  const Dataset images({1, 2, 2}, {1.5f, 0.25f, -0.5f, 1.0f}, {0});
  std::uint64_t clamped = 0;
  const auto bytes = encode_images(images, &clamped);
  CHECK(clamped == 2);
  const auto back = decode_images(bytes);
  CHECK(back.row(0)[0] == 1.0f);
  CHECK(back.row(0)[2] == 0.0f);

  const auto stats = write_images(images, dir / "img.csim");
  CHECK(stats.clamped_values == 2);
  RunManifest m;
  m.command = "test";
  m.add_file(dir.path(), dir / "img.csim", "CSIM", stats.clamped_values);
  m.write(dir / "manifest.json");
  const auto read = RunManifest::read(dir / "manifest.json");
  REQUIRE(read.files.size() == 1);
  CHECK(read.files[0].clamped_values == 2);
  CHECK(read.files[0].hash == stats.hash);
}

TEST_CASE("files, format detection and streaming reads") {
  testutil::TempDir dir("formats");
  const auto batch = sample_shifted_batch(ShiftSpec::truncation(1.1, 5), 37, 9, 0, LabelRule::round_robin(2));
  const auto ws = write_latents(batch, dir / "z.cslt");
  CHECK(ws.hash == hash_file(dir / "z.cslt"));
  CHECK(detect_format(read_file_bytes(dir / "z.cslt")) == FileFormat::latents);
  const auto as_data = read_dataset(dir / "z.cslt");
  CHECK(as_data.sample_shape() == std::vector<std::size_t>{5});
  CHECK(as_data.size() == 37);
  CHECK(read_latents(dir / "z.cslt").batch.labels()[1] == 1);

  std::mt19937_64 rng(2);
  const auto images = random_images(rng, 11);
  write_images(images, dir / "x.csim");
  CHECK(read_dataset(dir / "x.csim") == images);

  ArrayFileReader reader(dir / "x.csim");
  CHECK(reader.format() == FileFormat::images);
  CHECK(reader.rows() == 11);
  CHECK(reader.row_dim() == 768);
  std::vector<float> buf(3 * 768);
  reader.read_rows(4, 3, buf);
  for (std::size_t k = 0; k < buf.size(); ++k) REQUIRE(buf[k] == images.row(4)[k]);
  CHECK_THROWS_AS(reader.read_rows(10, 2, buf), InvalidArgument);

  ArrayFileReader lat(dir / "z.cslt");
  std::vector<float> row(5);
  lat.read_rows(36, 1, row);
  for (std::size_t k = 0; k < 5; ++k) CHECK(row[k] == as_data.row(36)[k]);

  CHECK_THROWS_AS(read_file_bytes(dir / "missing.cslt"), IoError);
  CHECK_THROWS_AS(read_file_bytes(dir.path()), IoError);
  CHECK_THROWS_AS(ArrayFileReader{dir.path()}, IoError);
}

TEST_CASE("manifests verify and detect tampering") {
  testutil::TempDir dir("formats");
  const auto batch = sample_shifted_batch(ShiftSpec::prior(4), 10, 1, 0, LabelRule::round_robin(1));
  write_latents(batch, dir / "a.cslt");
  RunManifest m;
  m.command = "gen-latents";
  m.config = {{"seed", 1}};
  m.created_at = utc_timestamp();
  m.add_file(dir.path(), dir / "a.cslt", "CSLT");
  m.write(dir / "manifest.json");
  CHECK(RunManifest::from_json(m.to_json()).to_json() == m.to_json());
  CHECK(verify_manifest(dir / "manifest.json").empty());
  CHECK(manifest_path_for(dir / "a.cslt").filename() == "a.cslt.manifest.json");

  auto bytes = read_file_bytes(dir / "a.cslt");
  bytes.back() ^= 1;
  write_file_bytes(bytes, dir / "a.cslt");
  CHECK(verify_manifest(dir / "manifest.json").size() == 1);
  std::filesystem::remove(dir / "a.cslt");
  CHECK(verify_manifest(dir / "manifest.json").size() == 1);
}

TEST_CASE("hash helpers") {
  const Bytes empty;
  CHECK(fnv1a64(empty) == 0xcbf29ce484222325ull);
  const Bytes a{'a'};
  CHECK(fnv1a64(a) == 0xaf63dc4c8601ec8cull);
  CHECK(hash_to_hex(0xabcull) == "0000000000000abc");
}
