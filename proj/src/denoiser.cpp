#include "nbdiff/denoiser.hpp"

#include <cmath>
#include <fstream>

#include "nbdiff/io.hpp"

namespace nbdiff {

double gradient_check(const ModelT<double>& model, const TrainBatchT<double>& batch,
                      const NoiseBank& bank, const NoiseSchedule& schedule,
                      const GradientCheckOptions& opts) {
  batch.validate();
  const int b = static_cast<int>(batch.size());
  const int h = batch.x0[0].shape.h, w = batch.x0[0].shape.w;
  const double denom =
      static_cast<double>(b) * static_cast<double>(batch.x0[0].shape.size());

  std::vector<detail::PreparedExample<double>> prepared;
  prepared.reserve(b);
  for (int j = 0; j < b; ++j)
    prepared.push_back(detail::prepare_example(model, batch, j, bank, schedule));

  auto loss_of = [&](const ModelT<double>& m) {
    double sum = 0.0;
    for (int j = 0; j < b; ++j) {
      MatrixX<double> pred = detail::model_forward(m, prepared[j].input, h, w, nullptr);
      sum += (pred - prepared[j].target).squaredNorm();
    }
    return sum / denom;
  };

  detail::GradsT<double> grads = detail::GradsT<double>::zeros_like(model);
  for (int j = 0; j < b; ++j) {
    detail::ForwardCache<double> cache;
    MatrixX<double> pred = detail::model_forward(model, prepared[j].input, h, w, &cache);
    MatrixX<double> dy = (pred - prepared[j].target) * (2.0 / denom);
    detail::model_backward(model, cache, h, w, dy, grads);
  }
  if (opts.corrupt_tensor >= 0 &&
      opts.corrupt_tensor < static_cast<int>(grads.w.size()))
    grads.w[opts.corrupt_tensor] *= 2.0;

  const std::int64_t total = model.param_count();
  ModelT<double> probe = model;
  Rng rng(opts.seed);
  const double fd_eps = opts.epsilon_fd;
  double max_rel = 0.0;
  for (int k = 0; k < opts.num_coords; ++k) {
    std::int64_t pick = static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(total)));
    double* param = nullptr;
    double analytic = 0.0;
    for (std::size_t i = 0; i < probe.convs.size() && !param; ++i) {
      auto wsize = probe.convs[i].weight.size();
      if (pick < wsize) {
        param = probe.convs[i].weight.data() + pick;
        analytic = grads.w[i].data()[pick];
        break;
      }
      pick -= wsize;
      if (pick < probe.convs[i].bias.size()) {
        param = probe.convs[i].bias.data() + pick;
        analytic = grads.b[i][pick];
        break;
      }
      pick -= probe.convs[i].bias.size();
    }
    const double orig = *param;
    *param = orig + fd_eps;
    const double lp = loss_of(probe);
    *param = orig - fd_eps;
    const double lm = loss_of(probe);
    *param = orig;
    const double fd = (lp - lm) / (2.0 * fd_eps);
    const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-6});
    max_rel = std::max(max_rel, std::abs(analytic - fd) / scale);
  }
  return max_rel;
}

namespace {

enum ArchTag : std::uint32_t {
  kTagImageChannels = 1,
  kTagCondChannels = 2,
  kTagTimeChannels = 3,
  kTagBaseChannels = 4,
  kTagLevels = 5,
};

}  // namespace

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write("DGN1", 4);
  io::write_u32(out, 1);  // format version
  io::write_u32(out, 5);  // arch field count
  io::write_u32(out, kTagImageChannels);
  io::write_u32(out, static_cast<std::uint32_t>(model.cfg.image_channels));
  io::write_u32(out, kTagCondChannels);
  io::write_u32(out, static_cast<std::uint32_t>(model.cfg.cond_channels));
  io::write_u32(out, kTagTimeChannels);
  io::write_u32(out, static_cast<std::uint32_t>(model.cfg.time_channels));
  io::write_u32(out, kTagBaseChannels);
  io::write_u32(out, static_cast<std::uint32_t>(model.cfg.base_channels));
  io::write_u32(out, kTagLevels);
  io::write_u32(out, static_cast<std::uint32_t>(model.cfg.levels));
  io::write_u64(out, static_cast<std::uint64_t>(model.param_count()));
  for (const auto& conv : model.convs) {
    for (Eigen::Index r = 0; r < conv.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < conv.weight.cols(); ++c)
        io::write_f32(out, conv.weight(r, c));
    for (Eigen::Index i = 0; i < conv.bias.size(); ++i) io::write_f32(out, conv.bias[i]);
  }
  if (!out) throw FormatError("write failed for " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  io::expect_magic(in, "DGN1", "checkpoint");
  std::uint32_t version = io::read_u32(in, "checkpoint version");
  if (version != 1)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  std::uint32_t fields = io::read_u32(in, "checkpoint arch block");
  ArchConfig cfg;
  bool seen[6] = {false, false, false, false, false, false};
  for (std::uint32_t i = 0; i < fields; ++i) {
    std::uint32_t tag = io::read_u32(in, "checkpoint arch tag");
    std::uint32_t value = io::read_u32(in, "checkpoint arch value");
    switch (tag) {
      case kTagImageChannels: cfg.image_channels = static_cast<int>(value); break;
      case kTagCondChannels: cfg.cond_channels = static_cast<int>(value); break;
      case kTagTimeChannels: cfg.time_channels = static_cast<int>(value); break;
      case kTagBaseChannels: cfg.base_channels = static_cast<int>(value); break;
      case kTagLevels: cfg.levels = static_cast<int>(value); break;
      default:
        throw FormatError("checkpoint: unknown arch tag " + std::to_string(tag));
    }
    seen[tag] = true;
  }
  for (std::uint32_t tag = 1; tag <= 5; ++tag)
    if (!seen[tag])
      throw FormatError("checkpoint: missing arch tag " + std::to_string(tag));
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid architecture: ") + e.what());
  }

  Model model = build_model<float>(cfg, 0);
  std::uint64_t count = io::read_u64(in, "checkpoint param count");
  if (count != static_cast<std::uint64_t>(model.param_count()))
    throw FormatError("checkpoint: parameter count " + std::to_string(count) +
                      " does not match architecture (" +
                      std::to_string(model.param_count()) + ")");
  for (auto& conv : model.convs) {
    for (Eigen::Index r = 0; r < conv.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < conv.weight.cols(); ++c)
        conv.weight(r, c) = io::read_f32(in, "checkpoint params");
    for (Eigen::Index i = 0; i < conv.bias.size(); ++i)
      conv.bias[i] = io::read_f32(in, "checkpoint params");
  }
  return model;
}

}  // namespace nbdiff
