#pragma once

// Binary containers for latent codes (CSLT) and images (CSIM).
//
// All integers and floats are little-endian; there is no padding.
//
// CSLT v1
//   0  char[4] magic "CSLT"
//   4  u32     version = 1
//   8  u32     dtype   = 1 (f32)
//   12 u32     d
//   16 u64     n
//   24 u64     seed
//   32 u8      family  {0 prior, 1 extend, 2 overlap, 3 truncation}
//   33 f64     shift parameter (theta or R; 0 for prior)
//   41 u16[n]  labels
//      f32[n*d] values, row-major
//
// CSIM v1
//   0  char[4] magic "CSIM"
//   4  u32     version = 1
//   8  u32     h
//   12 u32     w
//   16 u32     c
//   20 u64     n
//   28 u16[n]  labels
//      f32[n*h*w*c] values in [0, 1], HWC row-major

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "cshift/dataset.hpp"
#include "cshift/latent.hpp"
#include "cshift/set_distance.hpp"
#include "cshift/shift.hpp"

namespace cshift {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kDtypeF32 = 1;
inline constexpr std::size_t kLatentHeaderBytes = 41;
inline constexpr std::size_t kImageHeaderBytes = 28;

enum class FileFormat { latents, images };

const char* to_string(FileFormat format);

struct LatentFileHeader {
  std::uint32_t version = kFormatVersion;
  std::uint32_t dtype = kDtypeF32;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  ShiftFamily family = ShiftFamily::prior;
  double shift_parameter = 0.0;

  friend bool operator==(const LatentFileHeader&, const LatentFileHeader&) = default;
};

struct ImageFileHeader {
  std::uint32_t version = kFormatVersion;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::uint64_t count = 0;

  friend bool operator==(const ImageFileHeader&, const ImageFileHeader&) = default;
};

/// Contents of a CSLT file. The file carries family and parameter only; the
/// targets of extend/overlap batches are recorded in the run manifest.
struct LatentFile {
  LatentFileHeader header;
  LatentBatch batch;
};

struct WriteStats {
  std::uint64_t bytes = 0;
  std::uint64_t hash = 0;
  std::uint64_t clamped_values = 0;
};

std::vector<std::uint8_t> encode_latents(const ShiftedBatch& batch);
std::vector<std::uint8_t> encode_latents(const LatentFileHeader& header, const LatentBatch& batch);
LatentFile decode_latents(std::span<const std::uint8_t> bytes);

/// Values outside [0, 1] are clamped; the count is returned in `clamped`.
std::vector<std::uint8_t> encode_images(const Dataset& images, std::uint64_t* clamped = nullptr);
Dataset decode_images(std::span<const std::uint8_t> bytes);

WriteStats write_latents(const ShiftedBatch& batch, const std::filesystem::path& path);
LatentFile read_latents(const std::filesystem::path& path);
WriteStats write_images(const Dataset& images, const std::filesystem::path& path);
Dataset read_images(const std::filesystem::path& path);

/// Loads either format as a Dataset (latent rows have shape {d}).
Dataset read_dataset(const std::filesystem::path& path);

/// Identifies the format from the magic; throws ParseError(bad_magic) otherwise.
FileFormat detect_format(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
WriteStats write_file_bytes(std::span<const std::uint8_t> bytes, const std::filesystem::path& path);

/// Streams rows of a CSLT or CSIM file without loading the payload. The
/// header and payload length are validated on open.
class ArrayFileReader final : public RowSource {
 public:
  explicit ArrayFileReader(const std::filesystem::path& path);

  FileFormat format() const noexcept { return format_; }
  std::size_t rows() const override { return rows_; }
  std::size_t row_dim() const override { return row_dim_; }
  std::vector<std::size_t> sample_shape() const { return shape_; }
  std::uint64_t payload_bytes() const noexcept { return rows_ * row_dim_ * sizeof(float); }
  void read_rows(std::size_t begin, std::size_t count, std::span<float> out) override;

 private:
  std::ifstream in_;
  FileFormat format_ = FileFormat::images;
  std::size_t rows_ = 0;
  std::size_t row_dim_ = 0;
  std::vector<std::size_t> shape_;
  std::uint64_t values_offset_ = 0;
};

}  // namespace cshift
