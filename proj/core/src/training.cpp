#include "rvn/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fs = std::filesystem;

namespace rvn {

SliceDataset::SliceDataset(const Manifest& manifest, Split split) {
  for (const auto* entry : manifest.split_entries(split)) {
    const Volume vol = read_volume(entry->path);
    for (std::int64_t s = 0; s < vol.n_slices(); ++s) {
      Entry e;
      e.kspace = vol.slice(s);
      e.reference = vol.reference(s);
      e.id = fs::path(entry->path).filename().string() + ":" +
             std::to_string(s);
      slices_.push_back(std::move(e));
    }
  }
}

SamplingMask make_training_mask(const TrainConfig& cfg, std::int64_t ny,
                                std::int64_t nx, double R,
                                std::uint64_t seed) {
  if (cfg.mask_kind == "random_cartesian")
    return random_cartesian_mask(ny, nx, R, cfg.acs_fraction, seed);
  return variable_density_mask(ny, nx, R, cfg.center_radius, seed);
}

double train_step(RecurrentVarNet<float>& model, Adam<float>& optimizer,
                  const std::vector<TrainBatchSample>& batch,
                  const TrainConfig& cfg, std::int64_t iteration) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  model.params().zero_grads();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  double loss_sum = 0.0;
  for (const auto& sample : batch) {
    try {
      auto out = model.forward(sample.masked_kspace, sample.mask);
      auto loss = training_loss(out.image, sample.reference, cfg.w1, cfg.w2);
      const double value = static_cast<double>(loss.value()[0]);
      if (!std::isfinite(value))
        throw std::runtime_error("non-finite loss");
      loss_sum += value;
      ag::backward(ag::scale(loss, inv_batch));
    } catch (const std::exception& e) {
      throw std::runtime_error("train_step: iteration " +
                               std::to_string(iteration) + ", sample " +
                               sample.id + ": " + e.what());
    }
  }

  if (cfg.grad_clip > 0)
    clip_grad_norm(model.params().items(), cfg.grad_clip);
  const double lr = lr_at(iteration, cfg);
  if (lr > 0) optimizer.step(model.params().items(), lr);
  return loss_sum * inv_batch;
}

namespace {

std::uint64_t mask_seed_for(std::uint64_t base, std::uint64_t a,
                            std::uint64_t b, std::uint64_t c) {
  return Rng::derive_seed(base, a, b, c);
}

}  // namespace

ValidationResult validate(RecurrentVarNet<float>& model,
                          const SliceDataset& val, const TrainConfig& cfg) {
  ValidationResult out;
  if (val.size() == 0) return out;
  ag::NoGradGuard ng;
  double pooled = 0.0;
  std::int64_t pooled_n = 0;
  for (double R : cfg.accelerations) {
    double sum = 0.0;
    for (std::int64_t i = 0; i < val.size(); ++i) {
      const auto& full = val.kspace(i);
      const auto mask = make_training_mask(
          cfg, full.dim(1), full.dim(2), R,
          mask_seed_for(cfg.seed, 0x7a11d, static_cast<std::uint64_t>(i),
                        static_cast<std::uint64_t>(std::llround(R * 16))));
      auto recon = model.forward(apply_mask(full, mask), mask);
      const auto& ref = val.reference(i);
      const double s = ssim(ref, recon.image.value(), max_abs(ref));
      sum += s;
      pooled += s;
      ++pooled_n;
    }
    out.per_r.emplace_back(R, sum / static_cast<double>(val.size()));
  }
  out.pooled_ssim = pooled / static_cast<double>(pooled_n);
  return out;
}

TrainResult train_loop(RecurrentVarNet<float>& model, const Manifest& manifest,
                       const TrainConfig& cfg, const std::string& out_dir,
                       bool resume, std::string config_text,
                       const std::function<void(std::int64_t, double)>&
                           progress) {
  cfg.validate();
  const SliceDataset train(manifest, Split::train);
  const SliceDataset val(manifest, Split::validation);
  if (train.size() == 0)
    throw std::runtime_error("train_loop: the training split is empty");

  fs::create_directories(out_dir);
  TrainResult result;
  result.latest_path = (fs::path(out_dir) / "latest.ckpt").string();
  result.best_path = (fs::path(out_dir) / "best.ckpt").string();
  result.metrics_log_path = (fs::path(out_dir) / "metrics.log").string();

  Adam<float> optimizer(cfg.beta1, cfg.beta2, cfg.adam_eps);
  std::int64_t start_iter = 0;
  double best = -1.0;
  if (resume && fs::exists(result.latest_path)) {
    const auto ckpt = load_checkpoint(result.latest_path);
    restore_model(ckpt, model);
    if (ckpt.find(model.params().items()[0].name() + ".adam_m"))
      restore_optimizer(ckpt, model, optimizer);
    start_iter = ckpt.iteration;
    best = ckpt.best_validation_ssim;
  }

  std::ofstream log(result.metrics_log_path, std::ios::app);
  if (!log)
    throw std::runtime_error("train_loop: cannot open metrics log at " +
                             result.metrics_log_path);

  if (cfg.total_iters == 0) {
    save_checkpoint(result.latest_path,
                    make_checkpoint(model, &optimizer, 0, best, config_text));
    result.iterations = 0;
    result.best_validation_ssim = best;
    return result;
  }

  const auto save_latest = [&](std::int64_t iter) {
    save_checkpoint(result.latest_path, make_checkpoint(model, &optimizer,
                                                        iter, best,
                                                        config_text));
  };

  for (std::int64_t iter = start_iter; iter < cfg.total_iters; ++iter) {
    // assemble the batch: seeded slice choice, acceleration drawn evenly
    // from the configured list per sample, fresh mask per sample
    std::vector<TrainBatchSample> batch;
    Rng rng(Rng::derive_seed(cfg.seed, 0xba7c4, static_cast<std::uint64_t>(iter)));
    for (std::int64_t b = 0; b < cfg.batch_size; ++b) {
      const std::int64_t pick = rng.uniform_int(train.size());
      const double R = cfg.accelerations[static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(cfg.accelerations.size())))];
      TrainBatchSample sample;
      const auto& full = train.kspace(pick);
      sample.mask = make_training_mask(cfg, full.dim(1), full.dim(2), R,
                                       rng.next_u64());
      sample.masked_kspace = apply_mask(full, sample.mask);
      sample.reference = train.reference(pick);
      sample.id = train.id(pick);
      batch.push_back(std::move(sample));
    }

    const double loss = train_step(model, optimizer, batch, cfg, iter);
    if (progress) progress(iter, loss);

    const bool last = iter + 1 == cfg.total_iters;
    if ((iter + 1) % cfg.validate_every == 0 || last) {
      const auto v = validate(model, val, cfg);
      std::ostringstream line;
      line << "iter=" << (iter + 1) << " loss=" << std::setprecision(8)
           << loss;
      for (const auto& [r, s] : v.per_r)
        line << " ssim_R" << r << "=" << std::setprecision(8) << s;
      line << " pooled=" << std::setprecision(8) << v.pooled_ssim;
      log << line.str() << "\n";
      log.flush();
      if (val.size() > 0 && v.pooled_ssim > best) {
        best = v.pooled_ssim;
        save_checkpoint(
            result.best_path,
            make_checkpoint(model, &optimizer, iter + 1, best, config_text));
      }
    }
    if ((iter + 1) % cfg.checkpoint_every == 0 || last) save_latest(iter + 1);
  }

  result.iterations = cfg.total_iters;
  result.best_validation_ssim = best;
  return result;
}

}  // namespace rvn
