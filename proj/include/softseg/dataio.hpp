#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "softseg/image.hpp"
#include "softseg/mask.hpp"

namespace softseg {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// SSEG raster: "SSEG", u32 LE width, height, channels, then
// width*height*channels float32 LE values, row-major, channel-interleaved.
inline constexpr std::size_t kRasterHeaderBytes = 16;

struct RasterFile {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;
  std::vector<float> values;  // interleaved
};

enum class RasterKind { image, mask };

std::string encode_raster(const RasterFile& raster);
// `kind == mask` additionally requires one channel and values in [0,1].
RasterFile decode_raster(const std::string& bytes, RasterKind kind, const std::string& origin = "<memory>");
void write_raster(const std::filesystem::path& path, const RasterFile& raster);
RasterFile read_raster(const std::filesystem::path& path, RasterKind kind);

RasterFile to_raster(const Image& image);
RasterFile to_raster(const SoftMask& mask);
Image image_from_raster(const RasterFile& raster);
SoftMask soft_mask_from_raster(const RasterFile& raster);

// Binary P5 PGM, maxval 255, 0 = background, 255 = foreground.
std::string encode_pgm(const BinaryMask& mask);
BinaryMask decode_pgm(const std::string& bytes, const std::string& origin = "<memory>");
void write_pgm(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_pgm(const std::filesystem::path& path);

enum class Split { train, val };

struct CaseEntry {
  std::string id;
  std::string image;                     // relative to the manifest directory
  std::vector<std::string> annotations;  // idem
  std::optional<Split> split;
};

struct Manifest {
  std::filesystem::path root;  // directory holding the manifest
  std::optional<std::uint64_t> seed;
  std::vector<CaseEntry> cases;
};

// JSON document:
// { "format": "softseg-manifest", "version": 1, "seed": 7,
//   "cases": [ { "id": "case_000", "image": "case_000/image.sseg",
//                "annotations": ["case_000/annotator_0.pgm", ...],
//                "split": "train" } ] }
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct LoadedCase {
  std::string id;
  Image image;
  AnnotationSet annotations;
  SoftMask fused;
  std::optional<Split> split;
};

// Reads every referenced file and checks that annotations match the image.
std::vector<LoadedCase> load_cases(const Manifest& manifest);

}  // namespace softseg
