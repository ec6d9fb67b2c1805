#include "shapetask/unet.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "shapetask/io_util.hpp"
#include "shapetask/rng.hpp"

namespace shapetask {

namespace {

constexpr char kCheckpointMagic[] = "shapetask-checkpoint";
constexpr char kCheckpointVersion[] = "v1";

Tensor normal_tensor(std::vector<int> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, stddev);
  return t;
}

}  // namespace

MultiHeadUNet::MultiHeadUNet(const NetConfig& config, std::uint64_t seed)
    : config_(config), seed_(seed) {
  config.validate();
  Rng rng(seed);

  auto add_conv = [&](const std::string& name, int c_in, int c_out, int k) {
    const double stddev = std::sqrt(2.0 / (static_cast<double>(c_in) * k * k));
    params_.emplace_back(name + ".weight", normal_tensor({c_out, c_in, k, k}, stddev, rng));
    params_.emplace_back(name + ".bias", Tensor({c_out}));
    return ConvRef{static_cast<int>(params_.size()) - 2, static_cast<int>(params_.size()) - 1};
  };
  auto add_up = [&](const std::string& name, int c_in, int c_out) {
    const double stddev = std::sqrt(2.0 / (static_cast<double>(c_in) * 4.0));
    params_.emplace_back(name + ".weight", normal_tensor({c_in, c_out, 2, 2}, stddev, rng));
    return static_cast<int>(params_.size()) - 1;
  };
  auto channels = [&](int stage) { return config_.base_channels << stage; };

  for (int s = 0; s < config_.depth; ++s) {
    const int c_in = s == 0 ? 1 : channels(s - 1);
    const std::string name = "enc" + std::to_string(s);
    encoder_.push_back({add_conv(name + ".conv1", c_in, channels(s), 3),
                        add_conv(name + ".conv2", channels(s), channels(s), 3)});
  }
  bottleneck_ = {add_conv("bottleneck.conv1", channels(config_.depth - 1), channels(config_.depth), 3),
                 add_conv("bottleneck.conv2", channels(config_.depth), channels(config_.depth), 3)};
  for (int s = config_.depth - 1; s >= 0; --s) {
    const std::string name = "dec" + std::to_string(s);
    DecoderStage stage;
    stage.up_weight = add_up(name + ".up", channels(s + 1), channels(s));
    stage.conv1 = add_conv(name + ".conv1", 2 * channels(s), channels(s), 3);
    stage.conv2 = add_conv(name + ".conv2", channels(s), channels(s), 3);
    decoder_.push_back(stage);
  }
  head_seg_ = add_conv("head.seg", channels(0), config_.num_classes, 1);
  head_dist_ = add_conv("head.dist", channels(0), 1, 1);
  head_contour_ = add_conv("head.contour", channels(0), 2, 1);
}

template <typename Binder>
Prediction MultiHeadUNet::run(ad::Tape& tape, ad::Var image, Binder bind) const {
  const Tensor& img = tape.value(image);
  if (img.rank() != 3 || img.extent(0) != 1)
    throw InvalidShapeError("forward: expected 1×H×W image, got " + img.shape_string());
  const int stride = 1 << config_.depth;
  if (img.extent(1) % stride != 0 || img.extent(2) % stride != 0)
    throw InvalidShapeError("forward: spatial extents " + img.shape_string() +
                            " must be divisible by 2^depth = " + std::to_string(stride));

  auto conv_relu = [&](ad::Var x, const ConvRef& c) {
    return tape.relu(tape.conv2d(x, bind(c.weight), bind(c.bias)));
  };

  std::vector<ad::Var> skips;
  ad::Var x = image;
  for (const auto& stage : encoder_) {
    x = conv_relu(conv_relu(x, stage[0]), stage[1]);
    skips.push_back(x);
    x = tape.max_pool2(x);
  }
  x = conv_relu(conv_relu(x, bottleneck_[0]), bottleneck_[1]);
  for (size_t i = 0; i < decoder_.size(); ++i) {
    const DecoderStage& stage = decoder_[i];
    x = tape.up_conv2(x, bind(stage.up_weight));
    x = tape.concat_channels(skips[decoder_.size() - 1 - i], x);
    x = conv_relu(conv_relu(x, stage.conv1), stage.conv2);
  }

  Prediction out;
  out.seg_logits = tape.conv2d(x, bind(head_seg_.weight), bind(head_seg_.bias));
  out.dist = tape.conv2d(x, bind(head_dist_.weight), bind(head_dist_.bias));
  out.contour_logits = tape.conv2d(x, bind(head_contour_.weight), bind(head_contour_.bias));
  return out;
}

Prediction MultiHeadUNet::forward(ad::Tape& tape, ad::Var image) {
  std::vector<ad::Var> bound(params_.size(), ad::Var{-1});
  auto bind = [&](int index) {
    if (bound[index].id < 0) bound[index] = tape.param(params_[index]);
    return bound[index];
  };
  return run(tape, image, bind);
}

PredictionValues MultiHeadUNet::forward_eval(const Tensor& image) const {
  ad::Tape tape;
  ad::Var input = tape.constant(image);
  std::vector<ad::Var> bound(params_.size(), ad::Var{-1});
  auto bind = [&](int index) {
    if (bound[index].id < 0) bound[index] = tape.constant(params_[index].value);
    return bound[index];
  };
  Prediction pred = run(tape, input, bind);
  return PredictionValues{tape.value(pred.seg_logits), tape.value(pred.dist),
                          tape.value(pred.contour_logits)};
}

void MultiHeadUNet::zero_grads() {
  for (auto& p : params_) p.zero_grad();
}

std::int64_t MultiHeadUNet::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

LabelMap predict_labels(const Tensor& seg_logits) {
  if (seg_logits.rank() != 3 || seg_logits.extent(0) < 2)
    throw InvalidShapeError("predict_labels: expected L×H×W with L >= 2, got " +
                            seg_logits.shape_string());
  const int l = seg_logits.extent(0);
  const int h = seg_logits.extent(1), w = seg_logits.extent(2);
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;

  LabelMap out(h, w, l);
  for (std::int64_t p = 0; p < plane; ++p) {
    int best = 0;
    double best_v = seg_logits[p];
    for (int c = 1; c < l; ++c) {
      const double v = seg_logits[c * plane + p];
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    out.labels.data()[p] = best;
  }
  return out;
}

void save_checkpoint(const MultiHeadUNet& model, const std::filesystem::path& path) {
  std::string payload;
  payload.reserve(static_cast<size_t>(model.parameter_count()) * 8);
  for (const auto& p : model.parameters())
    for (std::int64_t i = 0; i < p.value.numel(); ++i) io::append_f64le(payload, p.value[i]);

  std::ostringstream header;
  header << kCheckpointMagic << " " << kCheckpointVersion << "\n";
  header << "seed " << model.seed() << "\n";
  const NetConfig& c = model.config();
  header << "net depth " << c.depth << " base_channels " << c.base_channels << " num_classes "
         << c.num_classes << "\n";
  header << "params " << model.parameters().size() << "\n";
  for (const auto& p : model.parameters()) {
    header << "param " << p.name << " " << p.value.rank();
    for (int e : p.value.shape()) header << " " << e;
    header << "\n";
  }
  header << "checksum fnv1a64 " << io::fnv1a64_hex(payload) << "\n";
  header << "---\n";

  io::atomic_write_file(path, header.str() + payload);
}

MultiHeadUNet load_checkpoint(const std::filesystem::path& path) {
  const std::string raw = io::read_file(path);
  const size_t header_end = raw.find("\n---\n");
  if (header_end == std::string::npos)
    throw ParseError("checkpoint: missing header terminator in " + path.string());
  std::istringstream header(raw.substr(0, header_end));
  const std::string payload = raw.substr(header_end + 5);

  std::string magic, version;
  header >> magic >> version;
  if (magic != kCheckpointMagic)
    throw ParseError("checkpoint: bad magic in " + path.string());
  if (version != kCheckpointVersion)
    throw VersionMismatchError("checkpoint: unsupported version '" + version + "'");

  std::string key;
  std::uint64_t seed = 0;
  NetConfig config;
  size_t param_count = 0;
  if (!(header >> key >> seed) || key != "seed")
    throw ParseError("checkpoint: expected seed line");
  std::string k1, k2, k3;
  if (!(header >> key >> k1 >> config.depth >> k2 >> config.base_channels >> k3 >>
        config.num_classes) ||
      key != "net" || k1 != "depth" || k2 != "base_channels" || k3 != "num_classes")
    throw ParseError("checkpoint: expected net line");
  if (!(header >> key >> param_count) || key != "params")
    throw ParseError("checkpoint: expected params line");

  MultiHeadUNet model(config, seed);
  if (model.parameters().size() != param_count)
    throw ParseError("checkpoint: parameter count does not match net config");
  for (auto& p : model.parameters()) {
    std::string name;
    int rank = 0;
    if (!(header >> key >> name >> rank) || key != "param" || name != p.name ||
        rank != p.value.rank())
      throw ParseError("checkpoint: parameter list does not match net config");
    for (int d = 0; d < rank; ++d) {
      int extent = 0;
      if (!(header >> extent) || extent != p.value.shape()[d])
        throw ParseError("checkpoint: shape mismatch for parameter " + name);
    }
  }
  std::string algo, expected;
  if (!(header >> key >> algo >> expected) || key != "checksum" || algo != "fnv1a64")
    throw ParseError("checkpoint: expected checksum line");

  if (payload.size() < static_cast<size_t>(model.parameter_count()) * 8)
    throw TruncatedPayloadError("checkpoint: payload shorter than declared shapes");
  if (payload.size() > static_cast<size_t>(model.parameter_count()) * 8)
    throw ParseError("checkpoint: trailing bytes after payload");
  if (io::fnv1a64_hex(payload) != expected)
    throw ChecksumError("checkpoint: payload checksum mismatch in " + path.string());

  size_t offset = 0;
  for (auto& p : model.parameters())
    for (std::int64_t i = 0; i < p.value.numel(); ++i, offset += 8)
      p.value[i] = io::read_f64le(payload, offset);
  return model;
}

}  // namespace shapetask
