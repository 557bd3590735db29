#include "cshift/formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

#include "cshift/error.hpp"
#include "cshift/hash.hpp"

namespace cshift {
namespace {

constexpr char kLatentMagic[4] = {'C', 'S', 'L', 'T'};
constexpr char kImageMagic[4] = {'C', 'S', 'I', 'M'};

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { out_.reserve(reserve); }

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                       std::uint8_t>>>;
    const U u = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

template <typename T>
T load_le(const std::uint8_t* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                     std::uint8_t>>>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return std::bit_cast<T>(u);
}

// a * b + c with overflow detection.
bool checked_mul_add(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t* out) {
  std::uint64_t m = 0;
  if (__builtin_mul_overflow(a, b, &m)) return false;
  return !__builtin_add_overflow(m, c, out);
}

void check_length(std::uint64_t actual, std::uint64_t header_bytes, std::uint64_t n,
                  std::uint64_t row_values) {
  std::uint64_t values = 0;
  std::uint64_t expected = 0;
  const bool ok = checked_mul_add(n, row_values, 0, &values) &&
                  checked_mul_add(values, sizeof(float), 0, &values) &&
                  checked_mul_add(n, sizeof(Label), header_bytes, &expected) &&
                  !__builtin_add_overflow(expected, values, &expected);
  if (!ok) {
    throw ParseError(header_bytes, "length_mismatch",
                     "declared payload size overflows 64 bits (file has " + std::to_string(actual) + " bytes)");
  }
  if (expected != actual) {
    throw ParseError(std::min(expected, actual), "length_mismatch",
                     "header declares " + std::to_string(expected) + " bytes but the file has " +
                         std::to_string(actual));
  }
}

void check_magic(std::span<const std::uint8_t> bytes, const char (&magic)[4], const char* name) {
  if (bytes.size() < 4) {
    throw ParseError(bytes.size(), "truncated_header", std::string("file too short for the ") + name + " magic");
  }
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw ParseError(0, "bad_magic", std::string("expected magic ") + name);
  }
}

LatentFileHeader parse_latent_header(std::span<const std::uint8_t> bytes, std::uint64_t total_size) {
  check_magic(bytes, kLatentMagic, "CSLT");
  if (bytes.size() < kLatentHeaderBytes) {
    throw ParseError(bytes.size(), "truncated_header", "CSLT header needs 41 bytes");
  }
  const std::uint8_t* p = bytes.data();
  LatentFileHeader h;
  h.version = load_le<std::uint32_t>(p + 4);
  if (h.version != kFormatVersion) {
    throw ParseError(4, "unsupported_version", "CSLT version " + std::to_string(h.version) + " is not supported");
  }
  h.dtype = load_le<std::uint32_t>(p + 8);
  if (h.dtype != kDtypeF32) {
    throw ParseError(8, "unsupported_dtype", "CSLT dtype " + std::to_string(h.dtype) + " is not supported");
  }
  h.dim = load_le<std::uint32_t>(p + 12);
  if (h.dim < 2) throw ParseError(12, "invalid_dimension", "latent dimension must be at least 2");
  h.count = load_le<std::uint64_t>(p + 16);
  h.seed = load_le<std::uint64_t>(p + 24);
  const std::uint8_t family = p[32];
  if (family > 3) throw ParseError(32, "bad_family", "unknown family code " + std::to_string(family));
  h.family = static_cast<ShiftFamily>(family);
  h.shift_parameter = load_le<double>(p + 33);
  if (!std::isfinite(h.shift_parameter)) {
    throw ParseError(33, "non_finite_parameter", "shift parameter is not finite");
  }
  const double v = h.shift_parameter;
  const bool valid_param = [&] {
    switch (h.family) {
      case ShiftFamily::prior: return v == 0.0;
      case ShiftFamily::extend:
      case ShiftFamily::overlap: return v >= 0.0 && v <= 0.5 * std::numbers::pi;
      case ShiftFamily::truncation: return v > 0.0;
    }
    return false;
  }();
  if (!valid_param) {
    throw ParseError(33, "invalid_parameter",
                     std::string("shift parameter out of range for the ") + to_string(h.family) + " family");
  }
  check_length(total_size, kLatentHeaderBytes, h.count, h.dim);
  return h;
}

ImageFileHeader parse_image_header(std::span<const std::uint8_t> bytes, std::uint64_t total_size) {
  check_magic(bytes, kImageMagic, "CSIM");
  if (bytes.size() < kImageHeaderBytes) {
    throw ParseError(bytes.size(), "truncated_header", "CSIM header needs 28 bytes");
  }
  const std::uint8_t* p = bytes.data();
  ImageFileHeader h;
  h.version = load_le<std::uint32_t>(p + 4);
  if (h.version != kFormatVersion) {
    throw ParseError(4, "unsupported_version", "CSIM version " + std::to_string(h.version) + " is not supported");
  }
  h.height = load_le<std::uint32_t>(p + 8);
  if (h.height == 0) throw ParseError(8, "invalid_shape", "image height is zero");
  h.width = load_le<std::uint32_t>(p + 12);
  if (h.width == 0) throw ParseError(12, "invalid_shape", "image width is zero");
  h.channels = load_le<std::uint32_t>(p + 16);
  if (h.channels == 0) throw ParseError(16, "invalid_shape", "image channel count is zero");
  h.count = load_le<std::uint64_t>(p + 20);
  std::uint64_t row = 0;
  if (!checked_mul_add(static_cast<std::uint64_t>(h.height) * h.width, h.channels, 0, &row)) {
    throw ParseError(8, "invalid_shape", "image shape overflows");
  }
  check_length(total_size, kImageHeaderBytes, h.count, row);
  return h;
}

std::vector<Label> decode_labels(const std::uint8_t* p, std::uint64_t n) {
  std::vector<Label> labels(n);
  for (std::uint64_t i = 0; i < n; ++i) labels[i] = load_le<std::uint16_t>(p + 2 * i);
  return labels;
}

}  // namespace

const char* to_string(FileFormat format) { return format == FileFormat::latents ? "CSLT" : "CSIM"; }

FileFormat detect_format(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError(bytes.size(), "truncated_header", "file too short for a magic");
  if (std::memcmp(bytes.data(), kLatentMagic, 4) == 0) return FileFormat::latents;
  if (std::memcmp(bytes.data(), kImageMagic, 4) == 0) return FileFormat::images;
  throw ParseError(0, "bad_magic", "expected magic CSLT or CSIM");
}

std::vector<std::uint8_t> encode_latents(const LatentFileHeader& header, const LatentBatch& batch) {
  if (batch.dim() != header.dim || batch.size() != header.count) {
    throw InvalidArgument("latent header does not describe the batch");
  }
  ByteWriter w(kLatentHeaderBytes + batch.size() * (2 + 4 * batch.dim()));
  w.raw(kLatentMagic, 4);
  w.le(header.version);
  w.le(header.dtype);
  w.le(header.dim);
  w.le(header.count);
  w.le(header.seed);
  w.le(static_cast<std::uint8_t>(header.family));
  w.le(header.shift_parameter);
  for (Label l : batch.labels()) w.le(l);
  for (double v : batch.values()) w.le(static_cast<float>(v));
  return w.take();
}

std::vector<std::uint8_t> encode_latents(const ShiftedBatch& batch) {
  LatentFileHeader header;
  header.dim = static_cast<std::uint32_t>(batch.batch.dim());
  header.count = batch.batch.size();
  header.seed = batch.source_seed;
  header.family = batch.spec.family();
  header.shift_parameter = batch.spec.parameter();
  return encode_latents(header, batch.batch);
}

LatentFile decode_latents(std::span<const std::uint8_t> bytes) {
  const LatentFileHeader h = parse_latent_header(bytes, bytes.size());
  const std::uint8_t* p = bytes.data() + kLatentHeaderBytes;
  LatentFile file{h, LatentBatch(h.dim, h.count, h.seed, 0)};
  const auto labels = decode_labels(p, h.count);
  std::copy(labels.begin(), labels.end(), file.batch.labels().begin());
  const std::uint64_t values_offset = kLatentHeaderBytes + 2 * h.count;
  auto values = file.batch.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = load_le<float>(bytes.data() + values_offset + 4 * i);
    if (!std::isfinite(f)) {
      throw ParseError(values_offset + 4 * i, "non_finite_value", "latent value is not finite");
    }
    values[i] = f;
  }
  return file;
}

std::vector<std::uint8_t> encode_images(const Dataset& images, std::uint64_t* clamped) {
  const auto& shape = images.sample_shape();
  if (shape.size() != 3 || shape[0] == 0 || shape[1] == 0 || shape[2] == 0) {
    throw InvalidArgument("images must have a nonempty h x w x c shape");
  }
  for (std::size_t s : shape) {
    if (s > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("image extent exceeds 32 bits");
  }
  ByteWriter w(kImageHeaderBytes + images.size() * (2 + 4 * images.row_dim()));
  w.raw(kImageMagic, 4);
  w.le(kFormatVersion);
  w.le(static_cast<std::uint32_t>(shape[0]));
  w.le(static_cast<std::uint32_t>(shape[1]));
  w.le(static_cast<std::uint32_t>(shape[2]));
  w.le(static_cast<std::uint64_t>(images.size()));
  for (Label l : images.labels()) w.le(l);
  std::uint64_t n_clamped = 0;
  for (float v : images.data()) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    if (c != v) ++n_clamped;
    w.le(c);
  }
  if (clamped) *clamped = n_clamped;
  return w.take();
}

Dataset decode_images(std::span<const std::uint8_t> bytes) {
  const ImageFileHeader h = parse_image_header(bytes, bytes.size());
  const std::uint8_t* p = bytes.data() + kImageHeaderBytes;
  auto labels = decode_labels(p, h.count);
  const std::uint64_t values_offset = kImageHeaderBytes + 2 * h.count;
  const std::uint64_t n_values = (bytes.size() - values_offset) / 4;
  std::vector<float> data(n_values);
  for (std::uint64_t i = 0; i < n_values; ++i) {
    const float f = load_le<float>(bytes.data() + values_offset + 4 * i);
    if (!(f >= 0.0f && f <= 1.0f)) {
      throw ParseError(values_offset + 4 * i, "value_out_of_range", "image value outside [0, 1]");
    }
    data[i] = f;
  }
  return Dataset({h.height, h.width, h.channels}, std::move(data), std::move(labels));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw IoError("not a readable file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  if (end < 0) throw IoError("cannot determine the size of " + path.string());
  const auto size = static_cast<std::size_t>(end);
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw IoError("cannot read " + path.string());
  }
  return bytes;
}

WriteStats write_file_bytes(std::span<const std::uint8_t> bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
  return WriteStats{bytes.size(), fnv1a64(bytes), 0};
}

WriteStats write_latents(const ShiftedBatch& batch, const std::filesystem::path& path) {
  return write_file_bytes(encode_latents(batch), path);
}

LatentFile read_latents(const std::filesystem::path& path) { return decode_latents(read_file_bytes(path)); }

WriteStats write_images(const Dataset& images, const std::filesystem::path& path) {
  std::uint64_t clamped = 0;
  const auto bytes = encode_images(images, &clamped);
  WriteStats stats = write_file_bytes(bytes, path);
  stats.clamped_values = clamped;
  return stats;
}

Dataset read_images(const std::filesystem::path& path) { return decode_images(read_file_bytes(path)); }

Dataset read_dataset(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (detect_format(bytes) == FileFormat::images) return decode_images(bytes);
  return Dataset::from_latents(decode_latents(bytes).batch);
}

ArrayFileReader::ArrayFileReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec) || !in_) throw IoError("cannot open " + path.string());
  in_.seekg(0, std::ios::end);
  const auto end = in_.tellg();
  if (end < 0) throw IoError("cannot determine the size of " + path.string());
  const auto size = static_cast<std::uint64_t>(end);
  in_.seekg(0);
  std::vector<std::uint8_t> head(std::min<std::uint64_t>(size, kLatentHeaderBytes));
  in_.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  format_ = detect_format(head);
  if (format_ == FileFormat::latents) {
    const auto h = parse_latent_header(head, size);
    rows_ = h.count;
    row_dim_ = h.dim;
    shape_ = {h.dim};
    values_offset_ = kLatentHeaderBytes + 2 * h.count;
  } else {
    const auto h = parse_image_header(head, size);
    rows_ = h.count;
    row_dim_ = static_cast<std::size_t>(h.height) * h.width * h.channels;
    shape_ = {h.height, h.width, h.channels};
    values_offset_ = kImageHeaderBytes + 2 * h.count;
  }
}

void ArrayFileReader::read_rows(std::size_t begin, std::size_t count, std::span<float> out) {
  if (begin + count > rows_ || out.size() < count * row_dim_) {
    throw InvalidArgument("row range outside the file");
  }
  const std::uint64_t offset = values_offset_ + static_cast<std::uint64_t>(begin) * row_dim_ * 4;
  std::vector<std::uint8_t> buffer(count * row_dim_ * 4);
  in_.seekg(static_cast<std::streamoff>(offset));
  if (!in_.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()))) {
    throw IoError("short read in array file");
  }
  for (std::size_t i = 0; i < count * row_dim_; ++i) {
    const float f = load_le<float>(buffer.data() + 4 * i);
    if (!std::isfinite(f)) {
      throw ParseError(offset + 4 * i, "non_finite_value", "array value is not finite");
    }
    out[i] = f;
  }
}

}  // namespace cshift
