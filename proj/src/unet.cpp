#include "softseg/unet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace softseg {

void TinyUNetConfig::validate() const {
  if (input_channels == 0) throw std::invalid_argument("model needs at least one input channel");
  if (base_channels == 0) throw std::invalid_argument("base_channels must be at least 1");
  if (depth == 0) throw std::invalid_argument("depth must be at least 1");
  if (depth > 16) throw std::invalid_argument("depth is unreasonably large");
}

std::vector<Shape> parameter_shapes(const TinyUNetConfig& config) {
  config.validate();
  constexpr std::size_t k = TinyUNetConfig::kernel;
  std::vector<Shape> shapes;
  std::size_t in = config.input_channels;
  for (std::size_t l = 0; l < config.depth; ++l) {
    const std::size_t c = config.channels_at(l);
    shapes.push_back({c, in, k, k});
    shapes.push_back({c});
    in = c;
  }
  // `in` now holds the bottom feature width.
  for (std::size_t l = config.depth; l-- > 0;) {
    const std::size_t c = config.channels_at(l);
    shapes.push_back({c, in + c, k, k});
    shapes.push_back({c});
    in = c;
  }
  shapes.push_back({1, config.base_channels, 1, 1});
  shapes.push_back({1});
  return shapes;
}

std::size_t parameter_count(const TinyUNetConfig& config) {
  std::size_t n = 0;
  for (const Shape& s : parameter_shapes(config)) n += shape_numel(s);
  return n;
}

Parameters init_parameters(const TinyUNetConfig& config, Rng& rng) {
  const std::vector<Shape> shapes = parameter_shapes(config);
  Parameters params;
  params.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); i += 2) {
    const Shape& w = shapes[i];
    const std::size_t fan_in = w[1] * w[2] * w[3];
    const bool head = i + 2 == shapes.size();
    if (head)
      params.push_back(xavier_init(w, fan_in, w[0] * w[2] * w[3], rng));
    else
      params.push_back(kaiming_init(w, fan_in, rng));
    params.emplace_back(shapes[i + 1]);
  }
  return params;
}

void check_parameters(const TinyUNetConfig& config, const Parameters& params) {
  const std::vector<Shape> shapes = parameter_shapes(config);
  if (params.size() != shapes.size())
    throw std::invalid_argument("model expects " + std::to_string(shapes.size()) +
                                " parameter tensors, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params[i].shape != shapes[i] || params[i].numel() != shape_numel(shapes[i]))
      throw std::invalid_argument("parameter tensor " + std::to_string(i) +
                                  " does not match the model configuration");
  }
}

SoftMask ForwardPass::probability_mask(std::size_t batch_index) const {
  const Tensor& p = probabilities();
  const std::size_t h = p.dim(2), w = p.dim(3);
  if (batch_index >= p.dim(0)) throw std::out_of_range("probability_mask: batch index out of range");
  const auto first = p.values.begin() + static_cast<std::ptrdiff_t>(batch_index * h * w);
  return SoftMask(w, h, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(h * w)));
}

void standardize_channels(Tensor& images) {
  if (images.rank() != 4) throw std::invalid_argument("standardize_channels: expected [B,C,H,W]");
  const std::size_t planes = images.dim(0) * images.dim(1);
  const std::size_t hw = images.dim(2) * images.dim(3);
  for (std::size_t p = 0; p < planes; ++p) {
    double* v = images.values.data() + p * hw;
    double mean = 0.0;
    for (std::size_t i = 0; i < hw; ++i) mean += v[i];
    mean /= static_cast<double>(hw);
    double var = 0.0;
    for (std::size_t i = 0; i < hw; ++i) var += (v[i] - mean) * (v[i] - mean);
    const double sd = std::sqrt(var / static_cast<double>(hw));
    const double scale = sd > 1e-12 ? 1.0 / sd : 1.0;
    for (std::size_t i = 0; i < hw; ++i) v[i] = (v[i] - mean) * scale;
  }
}

ForwardPass forward(const TinyUNetConfig& config, const Parameters& params, const Tensor& images) {
  check_parameters(config, params);
  if (images.rank() != 4) throw std::invalid_argument("forward: images must be [B,C,H,W]");
  if (images.dim(1) != config.input_channels)
    throw std::invalid_argument("forward: model expects " + std::to_string(config.input_channels) +
                                " input channels, got " + std::to_string(images.dim(1)));
  const std::size_t h = images.dim(2), w = images.dim(3);
  const std::size_t stride = config.stride();
  if (h % stride || w % stride) {
    const std::size_t ph = (stride - h % stride) % stride, pw = (stride - w % stride) % stride;
    throw std::invalid_argument("forward: spatial dims " + std::to_string(w) + "x" +
                                std::to_string(h) + " must be multiples of " +
                                std::to_string(stride) + "; pad by " + std::to_string(pw) +
                                "x" + std::to_string(ph) + " pixels");
  }

  ForwardPass pass;
  Tape& t = pass.tape;
  for (const Tensor& p : params) pass.parameter_vars.push_back(t.variable(p));
  const auto& pv = pass.parameter_vars;

  Tensor input = images;
  standardize_channels(input);
  Tape::Var x = t.constant(std::move(input));
  std::vector<Tape::Var> skips;
  std::size_t pi = 0;
  for (std::size_t l = 0; l < config.depth; ++l) {
    const Tape::Var f = t.relu(t.conv2d(x, pv[pi], pv[pi + 1]));
    pi += 2;
    skips.push_back(f);
    x = t.avg_pool2(f);
  }
  for (std::size_t l = config.depth; l-- > 0;) {
    const Tape::Var up = t.upsample2(x);
    x = t.relu(t.conv2d(t.concat_channels(up, skips[l]), pv[pi], pv[pi + 1]));
    pi += 2;
  }
  const Tape::Var logits = t.conv2d(x, pv[pi], pv[pi + 1]);
  pass.output = t.sigmoid(logits);
  return pass;
}

std::vector<Tensor> backward(ForwardPass& pass, const LossValue& loss) {
  if (!pass.recorded()) throw std::logic_error("backward requires a recorded forward pass");
  pass.tape.backward(pass.output, loss.gradient);
  std::vector<Tensor> grads;
  grads.reserve(pass.parameter_vars.size());
  for (Tape::Var v : pass.parameter_vars) {
    const Tensor& value = pass.tape.value(v);
    const auto g = pass.tape.grad(v);
    grads.emplace_back(value.shape, std::vector<double>(g.begin(), g.end()));
  }
  return grads;
}

Tensor stack_images(const std::vector<const Image*>& images) {
  if (images.empty()) throw std::invalid_argument("stack_images: empty batch");
  const Image& first = *images.front();
  Tensor t({images.size(), first.channels, first.height, first.width});
  auto out = t.values.begin();
  for (const Image* im : images) {
    if (im->width != first.width || im->height != first.height || im->channels != first.channels)
      throw std::invalid_argument("stack_images: images in a batch must share shape");
    out = std::copy(im->values.begin(), im->values.end(), out);
  }
  return t;
}

SoftMask predict(const TinyUNetConfig& config, const Parameters& params, const Image& image) {
  const ForwardPass pass = forward(config, params, stack_images({&image}));
  return pass.probability_mask(0);
}

}  // namespace softseg
