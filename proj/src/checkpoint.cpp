#include "softseg/checkpoint.hpp"

#include <bit>
#include <cstdint>

#include "softseg/dataio.hpp"

namespace softseg {

using json = nlohmann::json;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  std::uint64_t read(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size())
      throw IoError(origin_ + ": checkpoint truncated at byte offset " + std::to_string(pos_));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Parameters& params) {
  std::string out = "SSWT";
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Tensor& t : params) {
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Parameters decode_checkpoint(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "SSWT") != 0)
    throw IoError(origin + ": bad checkpoint magic at byte offset 0");
  const std::string tail = bytes.substr(4);
  Reader r(tail, origin);
  const auto count = static_cast<std::size_t>(r.read(4));
  Parameters params;
  for (std::size_t i = 0; i < count; ++i) {
    const auto rank = static_cast<std::size_t>(r.read(4));
    if (rank > 8) throw IoError(origin + ": implausible tensor rank " + std::to_string(rank));
    Shape shape;
    for (std::size_t d = 0; d < rank; ++d) shape.push_back(static_cast<std::size_t>(r.read(4)));
    const std::size_t n = shape_numel(shape);
    if (n > (tail.size() - r.pos()) / 8)
      throw IoError(origin + ": checkpoint truncated in tensor " + std::to_string(i));
    std::vector<double> values(n);
    for (double& v : values) v = std::bit_cast<double>(r.read(8));
    params.emplace_back(std::move(shape), std::move(values));
  }
  if (!r.done()) throw IoError(origin + ": trailing bytes after the last tensor");
  return params;
}

void write_checkpoint(const std::filesystem::path& path, const Parameters& params) {
  write_file_atomic(path, encode_checkpoint(params));
}

Parameters read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

json config_to_json(const TinyUNetConfig& model, const TrainConfig& train) {
  const AugmentConfig& a = train.augment;
  return {
      {"model",
       {{"input_channels", model.input_channels},
        {"base_channels", model.base_channels},
        {"depth", model.depth},
        {"kernel", TinyUNetConfig::kernel}}},
      {"train",
       {{"epochs", train.epochs},
        {"batch_size", train.batch_size},
        {"seed", train.seed},
        {"loss", loss_name(train.loss)},
        {"lr_start", train.lr_start},
        {"lr_end", train.lr_end},
        {"adam", {{"beta1", 0.9}, {"beta2", 0.999}, {"weight_decay", 0.0}}},
        {"augment",
         {{"enabled", a.enabled},
          {"max_translate", a.max_translate},
          {"max_rotate_deg", a.max_rotate_deg},
          {"max_zoom", a.max_zoom},
          {"hflip_prob", a.hflip_prob},
          {"vflip_prob", a.vflip_prob},
          {"copies", a.copies}}}}},
  };
}

void config_from_json(const json& doc, TinyUNetConfig& model, TrainConfig& train) {
  try {
    if (doc.contains("model")) {
      const json& m = doc.at("model");
      model.input_channels = m.value("input_channels", model.input_channels);
      model.base_channels = m.value("base_channels", model.base_channels);
      model.depth = m.value("depth", model.depth);
      if (m.value("kernel", TinyUNetConfig::kernel) != TinyUNetConfig::kernel)
        throw std::invalid_argument("only 3x3 kernels are supported");
    }
    if (doc.contains("train")) {
      const json& t = doc.at("train");
      train.epochs = t.value("epochs", train.epochs);
      train.batch_size = t.value("batch_size", train.batch_size);
      train.seed = t.value("seed", train.seed);
      if (t.contains("loss")) train.loss = parse_loss(t.at("loss").get<std::string>());
      train.lr_start = t.value("lr_start", train.lr_start);
      train.lr_end = t.value("lr_end", train.lr_end);
      if (t.contains("augment")) {
        const json& a = t.at("augment");
        AugmentConfig& c = train.augment;
        c.enabled = a.value("enabled", c.enabled);
        c.max_translate = a.value("max_translate", c.max_translate);
        c.max_rotate_deg = a.value("max_rotate_deg", c.max_rotate_deg);
        c.max_zoom = a.value("max_zoom", c.max_zoom);
        c.hflip_prob = a.value("hflip_prob", c.hflip_prob);
        c.vflip_prob = a.value("vflip_prob", c.vflip_prob);
        c.copies = a.value("copies", c.copies);
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed training config: ") + e.what());
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".json";
  return p;
}

std::filesystem::path history_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".history.csv";
  return p;
}

}  // namespace softseg
