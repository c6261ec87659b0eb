#include "softseg/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace softseg {

namespace fs = std::filesystem;
using json = nlohmann::json;

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_raster(const RasterFile& r) {
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
  if (r.values.size() != n) throw std::invalid_argument("raster payload does not match its header");
  std::string out;
  out.reserve(kRasterHeaderBytes + 4 * n);
  out += "SSEG";
  put_u32(out, r.width);
  put_u32(out, r.height);
  put_u32(out, r.channels);
  for (float v : r.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

RasterFile decode_raster(const std::string& bytes, RasterKind kind, const std::string& origin) {
  if (bytes.size() < kRasterHeaderBytes)
    throw IoError(origin + ": truncated header, expected " + std::to_string(kRasterHeaderBytes) +
                  " bytes, got " + std::to_string(bytes.size()));
  if (bytes.compare(0, 4, "SSEG") != 0) throw IoError(origin + ": bad magic at byte offset 0");
  RasterFile r;
  r.width = get_u32(bytes, 4);
  r.height = get_u32(bytes, 8);
  r.channels = get_u32(bytes, 12);
  if (r.width == 0 || r.height == 0 || r.channels == 0)
    throw IoError(origin + ": zero dimension in header at byte offset 4");
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
  const std::size_t expected = kRasterHeaderBytes + 4 * n;
  if (bytes.size() != expected)
    throw IoError(origin + ": " + (bytes.size() < expected ? "truncated payload" : "trailing data") +
                  ", expected " + std::to_string(expected) + " bytes, got " +
                  std::to_string(bytes.size()));
  if (kind == RasterKind::mask && r.channels != 1)
    throw IoError(origin + ": mask rasters must have one channel, header says " +
                  std::to_string(r.channels) + " (byte offset 12)");
  r.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t offset = kRasterHeaderBytes + 4 * i;
    const float v = std::bit_cast<float>(get_u32(bytes, offset));
    if (!std::isfinite(v))
      throw IoError(origin + ": non-finite value at byte offset " + std::to_string(offset));
    if (kind == RasterKind::mask && !(v >= 0.0f && v <= 1.0f))
      throw IoError(origin + ": mask value outside [0,1] at byte offset " + std::to_string(offset));
    r.values[i] = v;
  }
  return r;
}

void write_raster(const fs::path& path, const RasterFile& raster) {
  write_file_atomic(path, encode_raster(raster));
}

RasterFile read_raster(const fs::path& path, RasterKind kind) {
  return decode_raster(read_file(path), kind, path.string());
}

RasterFile to_raster(const Image& image) {
  RasterFile r;
  r.width = static_cast<std::uint32_t>(image.width);
  r.height = static_cast<std::uint32_t>(image.height);
  r.channels = static_cast<std::uint32_t>(image.channels);
  r.values.resize(image.values.size());
  std::size_t i = 0;
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < image.channels; ++c)
        r.values[i++] = static_cast<float>(image.at(c, x, y));
  return r;
}

RasterFile to_raster(const SoftMask& mask) {
  RasterFile r;
  r.width = static_cast<std::uint32_t>(mask.width());
  r.height = static_cast<std::uint32_t>(mask.height());
  r.channels = 1;
  r.values.reserve(mask.size());
  for (double v : mask.values()) r.values.push_back(static_cast<float>(v));
  return r;
}

Image image_from_raster(const RasterFile& r) {
  Image im(r.width, r.height, r.channels);
  std::size_t i = 0;
  for (std::size_t y = 0; y < r.height; ++y)
    for (std::size_t x = 0; x < r.width; ++x)
      for (std::size_t c = 0; c < r.channels; ++c) im.at(c, x, y) = r.values[i++];
  return im;
}

SoftMask soft_mask_from_raster(const RasterFile& r) {
  if (r.channels != 1) throw std::invalid_argument("soft mask raster must have one channel");
  return SoftMask(r.width, r.height, std::vector<double>(r.values.begin(), r.values.end()));
}

std::string encode_pgm(const BinaryMask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  out.reserve(out.size() + mask.size());
  for (std::uint8_t v : mask.values()) out.push_back(static_cast<char>(v ? 255 : 0));
  return out;
}

namespace {

// Reads the next header token, skipping whitespace and # comments.
std::string pgm_token(const std::string& bytes, std::size_t& pos, const std::string& origin) {
  while (pos < bytes.size()) {
    const auto c = static_cast<unsigned char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw IoError(origin + ": truncated PGM header");
  return bytes.substr(start, pos - start);
}

std::size_t pgm_number(const std::string& token, const std::string& origin, const char* what) {
  if (token.empty() || token.size() > 9 ||
      !std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw IoError(origin + ": invalid PGM " + what + " '" + token + "'");
  return static_cast<std::size_t>(std::stoul(token));
}

}  // namespace

BinaryMask decode_pgm(const std::string& bytes, const std::string& origin) {
  std::size_t pos = 0;
  if (pgm_token(bytes, pos, origin) != "P5") throw IoError(origin + ": not a binary (P5) PGM");
  const std::size_t w = pgm_number(pgm_token(bytes, pos, origin), origin, "width");
  const std::size_t h = pgm_number(pgm_token(bytes, pos, origin), origin, "height");
  const std::size_t maxval = pgm_number(pgm_token(bytes, pos, origin), origin, "maxval");
  if (w == 0 || h == 0) throw IoError(origin + ": PGM has a zero dimension");
  if (maxval != 255) throw IoError(origin + ": PGM maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw IoError(origin + ": missing whitespace after PGM header");
  ++pos;
  if (bytes.size() - pos != w * h)
    throw IoError(origin + ": PGM payload expected " + std::to_string(w * h) + " bytes, got " +
                  std::to_string(bytes.size() - pos));
  std::vector<std::uint8_t> values(w * h);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto v = static_cast<unsigned char>(bytes[pos + i]);
    if (v != 0 && v != 255)
      throw IoError(origin + ": non-binary gray value " + std::to_string(v) + " at byte offset " +
                    std::to_string(pos + i));
    values[i] = v ? 1 : 0;
  }
  return BinaryMask(w, h, std::move(values));
}

void write_pgm(const fs::path& path, const BinaryMask& mask) { write_file_atomic(path, encode_pgm(mask)); }

BinaryMask read_pgm(const fs::path& path) { return decode_pgm(read_file(path), path.string()); }

namespace {

std::string split_name(Split s) { return s == Split::train ? "train" : "val"; }

}  // namespace

Manifest read_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": invalid manifest JSON: " + e.what());
  }
  Manifest m;
  m.root = path.has_parent_path() ? path.parent_path() : fs::path(".");
  try {
    if (doc.value("format", std::string()) != "softseg-manifest")
      throw IoError(path.string() + ": not a softseg manifest");
    if (doc.contains("seed")) m.seed = doc.at("seed").get<std::uint64_t>();
    std::set<std::string> ids;
    for (const json& c : doc.at("cases")) {
      CaseEntry e;
      e.id = c.at("id").get<std::string>();
      if (!ids.insert(e.id).second) throw IoError(path.string() + ": duplicate case id '" + e.id + "'");
      e.image = c.at("image").get<std::string>();
      e.annotations = c.at("annotations").get<std::vector<std::string>>();
      if (e.annotations.empty())
        throw IoError(path.string() + ": case '" + e.id + "' has no annotations");
      if (c.contains("split")) {
        const std::string s = c.at("split").get<std::string>();
        if (s == "train") e.split = Split::train;
        else if (s == "val") e.split = Split::val;
        else throw IoError(path.string() + ": case '" + e.id + "' has unknown split '" + s + "'");
      }
      m.cases.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed manifest: " + e.what());
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  json doc;
  doc["format"] = "softseg-manifest";
  doc["version"] = 1;
  if (manifest.seed) doc["seed"] = *manifest.seed;
  doc["cases"] = json::array();
  for (const CaseEntry& e : manifest.cases) {
    json c;
    c["id"] = e.id;
    c["image"] = e.image;
    c["annotations"] = e.annotations;
    if (e.split) c["split"] = split_name(*e.split);
    doc["cases"].push_back(std::move(c));
  }
  write_file_atomic(path, doc.dump(2) + "\n");
}

std::vector<LoadedCase> load_cases(const Manifest& manifest) {
  std::vector<LoadedCase> out;
  out.reserve(manifest.cases.size());
  for (const CaseEntry& e : manifest.cases) {
    try {
      Image image = image_from_raster(read_raster(manifest.root / e.image, RasterKind::image));
      std::vector<BinaryMask> masks;
      for (std::size_t k = 0; k < e.annotations.size(); ++k) {
        BinaryMask m = read_pgm(manifest.root / e.annotations[k]);
        if (m.extent() != image.extent())
          throw IoError("annotation " + std::to_string(k) + " (" + e.annotations[k] + ") is " +
                        std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                        ", image is " + std::to_string(image.width) + "x" +
                        std::to_string(image.height));
        masks.push_back(std::move(m));
      }
      AnnotationSet set(std::move(masks));
      SoftMask fused = fuse_mean(set);
      out.push_back(LoadedCase{e.id, std::move(image), std::move(set), std::move(fused), e.split});
    } catch (const std::exception& ex) {
      throw IoError("case '" + e.id + "': " + ex.what());
    }
  }
  return out;
}

}  // namespace softseg
