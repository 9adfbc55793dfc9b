#include "drc/eval/diagnostics.hpp"

namespace drc::eval {

namespace {

nn::Tensor<double> uniform(nn::Shape shape, Rng& rng, double scale) {
  nn::Tensor<double> t(std::move(shape));
  for (nn::Index i = 0; i < t.size(); ++i) t[i] = scale * (2 * uniform01(rng) - 1);
  return t;
}

}  // namespace

net::DrcConfig gradcheck_network(int depth, int repeats) {
  net::DrcConfig c;
  c.depth = depth;
  c.repeats = repeats;
  c.hidden_channels = 4;
  c.gate_channels = 16;
  c.encoder = {{4, 3, 1}};
  c.head_hidden = 8;
  c.action_count = 5;
  c.observation_height = 4;
  c.observation_width = 4;
  c.observation_channels = 4;
  return c;
}

nn::GradCheckResult drc_gradient_check(const net::DrcConfig& config, std::uint64_t seed, double epsilon,
                                       double floor) {
  const net::DrcNet<double> net(config);
  Rng rng = make_rng(seed);
  nn::ParameterSet<double> params;
  for (const auto& [path, shape] : net.parameter_shapes()) params.add(path, uniform(shape, rng, 0.5));
  auto state = net.zero_state(1);
  for (auto& c : state.cell) c = uniform(c.shape(), rng, 1.0);
  for (auto& h : state.hidden) h = uniform(h.shape(), rng, 0.9);
  const nn::Shape obs_shape{1, config.observation_height, config.observation_width, config.observation_channels};
  const auto obs0 = uniform(obs_shape, rng, 1.0);
  const auto obs1 = uniform(obs_shape, rng, 1.0);
  const std::vector<int> actions = {static_cast<int>(uniform_index(rng, static_cast<std::size_t>(config.action_count)))};

  return nn::gradient_check(
      params,
      [&](nn::Graph<double>& g, const nn::ParameterSet<double>& p) {
        auto st = net.bind_state(g, state);
        nn::Var<double> total;
        bool first = true;
        for (const auto* obs : {&obs0, &obs1}) {
          auto enc = net.encode(g, p, g.constant(*obs));
          st = net.step(g, p, st, net.core_input(g, p, enc));
          auto h = net.heads(g, p, st.hidden.back(), enc);
          auto term = nn::add(nn::sum(nn::gather_cols(nn::log_softmax(h.logits), actions)), nn::sum(nn::square(h.value)));
          total = first ? term : nn::add(total, term);
          first = false;
        }
        return total;
      },
      epsilon, floor);
}

}  // namespace drc::eval
