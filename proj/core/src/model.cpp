#include "rvn/model.hpp"

#include <stdexcept>

namespace rvn {

void ModelConfig::validate() const {
  if (time_steps < 1) throw std::invalid_argument("config: time_steps >= 1");
  if (recurrent_layers < 1)
    throw std::invalid_argument("config: recurrent_layers >= 1");
  if (hidden_channels < 1)
    throw std::invalid_argument("config: hidden_channels >= 1");
  if (rsi_dilations.size() != rsi_filters.size())
    throw std::invalid_argument(
        "config: rsi_dilations and rsi_filters must have equal length");
  if (rsi_dilations.empty())
    throw std::invalid_argument("config: rsi layers must be nonempty");
  if (ser_filters.size() < 2)
    throw std::invalid_argument("config: ser_filters needs >= 2 scales");
  if (rsi_input != "sense" && rsi_input != "rss")
    throw std::invalid_argument("config: rsi_input must be 'sense' or 'rss'");
  if (sens_eps_rel <= 0)
    throw std::invalid_argument("config: sens_eps_rel must be positive");
}

namespace nnmod {

template <typename T>
Var<T> ConvGruCell<T>::step(const Var<T>& x, const Var<T>& h) const {
  auto xh = nn::concat_ch(x, h);
  auto z = ag::sigmoid(update_gate(xh));
  auto r = ag::sigmoid(reset_gate(xh));
  auto cand = ag::tanh_op(candidate(nn::concat_ch(x, ag::mul(r, h))));
  auto one_minus_z = ag::add_scalar(ag::scale(z, -1.0), 1.0);
  return ag::add(ag::mul(one_minus_z, h), ag::mul(z, cand));
}

template <typename T>
ConvGruCell<T> make_conv_gru(nn::ParamRegistry<T>& reg,
                             const std::string& name, std::int64_t channels,
                             Rng& rng) {
  ConvGruCell<T> cell;
  cell.update_gate = nn::make_conv2d(reg, name + ".update", 2 * channels,
                                     channels, 3, 1, 1, rng);
  cell.reset_gate = nn::make_conv2d(reg, name + ".reset", 2 * channels,
                                    channels, 3, 1, 1, rng);
  cell.candidate = nn::make_conv2d(reg, name + ".candidate", 2 * channels,
                                   channels, 3, 1, 1, rng);
  return cell;
}

template <typename T>
typename RecurrentUnit<T>::Output RecurrentUnit<T>::forward(
    const Var<T>& image_2ch, const std::vector<Var<T>>& hidden) const {
  if (hidden.size() != cells.size())
    throw std::invalid_argument("RecurrentUnit: hidden state layer count " +
                                std::to_string(hidden.size()) + ", expected " +
                                std::to_string(cells.size()));
  Output out;
  out.hidden.reserve(cells.size());
  auto x = ag::relu(conv_in(image_2ch));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    x = ag::relu(convs[i](x));
    x = cells[i].step(x, hidden[i]);
    out.hidden.push_back(x);
  }
  out.refinement = conv_out(x);
  if (!all_finite(out.refinement.value()))
    throw std::runtime_error("RecurrentUnit: non-finite activations");
  return out;
}

template <typename T>
RecurrentUnit<T> make_recurrent_unit(nn::ParamRegistry<T>& reg,
                                     const std::string& name,
                                     std::int64_t channels, int layers,
                                     Rng& rng) {
  RecurrentUnit<T> unit;
  unit.conv_in = nn::make_conv2d(reg, name + ".conv_in", 2, channels, 5, 2, 1,
                                 rng);
  for (int i = 0; i < layers; ++i) {
    unit.convs.push_back(nn::make_conv2d(
        reg, name + ".conv" + std::to_string(i), channels, channels, 3, 1, 1,
        rng));
    unit.cells.push_back(make_conv_gru(
        reg, name + ".gru" + std::to_string(i), channels, rng));
  }
  unit.conv_out = nn::make_conv2d(reg, name + ".conv_out", channels, 2, 3, 1,
                                  1, rng);
  return unit;
}

template <typename T>
std::vector<Var<T>> StateInitializer<T>::forward(const Var<T>& x) const {
  Var<T> cur = x;
  for (std::size_t i = 0; i < features.size(); ++i)
    cur = features[i](nn::pad_replicate(cur, pads[i]));
  std::vector<Var<T>> states;
  states.reserve(heads.size());
  for (const auto& head : heads) states.push_back(ag::relu(head(cur)));
  return states;
}

template <typename T>
StateInitializer<T> make_state_initializer(nn::ParamRegistry<T>& reg,
                                           const std::string& name,
                                           std::int64_t in_channels,
                                           const std::vector<int>& dilations,
                                           const std::vector<int>& filters,
                                           std::int64_t hidden_channels,
                                           int layers, Rng& rng) {
  StateInitializer<T> rsi;
  std::int64_t cin = in_channels;
  for (std::size_t i = 0; i < dilations.size(); ++i) {
    rsi.features.push_back(nn::make_conv2d(
        reg, name + ".feature" + std::to_string(i), cin, filters[i], 3,
        /*pad=*/0, /*dilation=*/dilations[i], rng));
    rsi.pads.push_back(dilations[i]);
    cin = filters[i];
  }
  for (int i = 0; i < layers; ++i)
    rsi.heads.push_back(nn::make_conv2d(reg,
                                        name + ".head" + std::to_string(i),
                                        cin, hidden_channels, 1, 0, 1, rng));
  return rsi;
}

#define RVN_INSTANTIATE_MODEL_NNMOD(T)                                        \
  template struct ConvGruCell<T>;                                             \
  template ConvGruCell<T> make_conv_gru(nn::ParamRegistry<T>&,                \
                                        const std::string&, std::int64_t,     \
                                        Rng&);                                \
  template struct RecurrentUnit<T>;                                           \
  template RecurrentUnit<T> make_recurrent_unit(nn::ParamRegistry<T>&,        \
                                                const std::string&,           \
                                                std::int64_t, int, Rng&);     \
  template struct StateInitializer<T>;                                        \
  template StateInitializer<T> make_state_initializer(                        \
      nn::ParamRegistry<T>&, const std::string&, std::int64_t,                \
      const std::vector<int>&, const std::vector<int>&, std::int64_t, int,    \
      Rng&);

RVN_INSTANTIATE_MODEL_NNMOD(float)
RVN_INSTANTIATE_MODEL_NNMOD(double)

#undef RVN_INSTANTIATE_MODEL_NNMOD

}  // namespace nnmod

template <typename T>
RecurrentVarNet<T>::RecurrentVarNet(ModelConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);

  const int unit_count = cfg_.share_weights ? 1 : cfg_.time_steps;
  for (int t = 0; t < unit_count; ++t) {
    const std::string name = cfg_.share_weights
                                 ? std::string("unit_shared")
                                 : "block_" + std::to_string(t) + ".unit";
    units_.push_back(nnmod::make_recurrent_unit<T>(
        reg_, name, cfg_.hidden_channels, cfg_.recurrent_layers, rng));
  }
  for (int t = 0; t < cfg_.time_steps; ++t)
    alphas_.push_back(reg_.add("alpha_" + std::to_string(t),
                               Tensor<T>::full({1}, T(1))));
  if (cfg_.use_rsi)
    rsi_ = nnmod::make_state_initializer<T>(
        reg_, "rsi", cfg_.rsi_input == "sense" ? 2 : 1, cfg_.rsi_dilations,
        cfg_.rsi_filters, cfg_.hidden_channels, cfg_.recurrent_layers, rng);
  if (cfg_.use_ser)
    ser_.emplace(reg_, "ser", cfg_.ser_filters, cfg_.ser_leaky_slope, rng);
}

template <typename T>
typename RecurrentVarNet<T>::BlockStep RecurrentVarNet<T>::block_step(
    int t, const ag::Var<T>& kspace, const ag::Var<T>& measured,
    const SamplingMask& mask, const ag::Var<T>& maps,
    const std::vector<ag::Var<T>>& hidden) const {
  if (t < 0 || t >= cfg_.time_steps)
    throw std::out_of_range("block_step: bad iteration index");

  auto image = ag::reduce_ch(ag::ifft2c_ch(kspace), maps);
  auto unit_out = unit(t).forward(image, hidden);

  auto residual = ag::apply_mask_ch(ag::sub(kspace, measured), mask.mask);
  auto refinement = ag::fft2c_ch(ag::expand_ch(unit_out.refinement, maps));
  BlockStep out;
  out.kspace = ag::add(
      ag::sub(kspace, ag::scale_by(residual,
                                   alphas_[static_cast<std::size_t>(t)])),
      refinement);
  out.hidden = std::move(unit_out.hidden);
  return out;
}

template <typename T>
typename RecurrentVarNet<T>::Forward RecurrentVarNet<T>::forward(
    const Tensor<std::complex<T>>& masked_ksp, const SamplingMask& mask) {
  if (masked_ksp.rank() != 3)
    throw std::invalid_argument("forward: expected [n_c, ny, nx] k-space");
  if (masked_ksp.dim(1) != mask.ny() || masked_ksp.dim(2) != mask.nx())
    throw std::invalid_argument("forward: k-space/mask shape mismatch");
  if (masked_ksp.dim(1) < 4 || masked_ksp.dim(2) < 4)
    throw std::invalid_argument("forward: spatial dims must be >= 4");
  if (!all_finite(masked_ksp))
    throw std::invalid_argument("forward: non-finite k-space input");

  const std::int64_t ny = masked_ksp.dim(1), nx = masked_ksp.dim(2);

  const auto init_maps =
      estimate_initial_maps(masked_ksp, mask, cfg_.sens_eps_rel);
  auto maps_const = ag::Var<T>::constant(complex_to_channels(init_maps));
  ag::Var<T> maps = cfg_.use_ser ? ser_->forward(maps_const) : maps_const;

  auto measured = ag::Var<T>::constant(complex_to_channels(masked_ksp));

  std::vector<ag::Var<T>> hidden;
  if (cfg_.use_rsi) {
    auto zero_filled = ag::ifft2c_ch(measured);
    ag::Var<T> rsi_in =
        cfg_.rsi_input == "sense"
            ? ag::reduce_ch(zero_filled, maps)
            : ag::reshape(ag::rss_ch(zero_filled), Shape{1, ny, nx});
    hidden = rsi_->forward(rsi_in);
  } else {
    for (int i = 0; i < cfg_.recurrent_layers; ++i)
      hidden.push_back(ag::Var<T>::constant(
          Tensor<T>({cfg_.hidden_channels, ny, nx})));
  }

  ag::Var<T> kspace = measured;
  for (int t = 0; t < cfg_.time_steps; ++t) {
    auto step = block_step(t, kspace, measured, mask, maps, hidden);
    kspace = std::move(step.kspace);
    hidden = std::move(step.hidden);
  }

  Forward out;
  out.image = ag::rss_ch(ag::ifft2c_ch(kspace));
  out.kspace = std::move(kspace);
  out.maps = std::move(maps);
  return out;
}

template <typename T>
void RecurrentVarNet<T>::zero_all_parameters() {
  for (auto& p : reg_.items()) p.value().fill(T(0));
}

template class RecurrentVarNet<float>;
template class RecurrentVarNet<double>;

}  // namespace rvn
