#include "pairpred/app/gradcheck_suite.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

#include "pairpred/diffcore/ops.hpp"
#include "pairpred/paircov.hpp"

namespace pairpred::app {

namespace {

using diff::Tensor;

Tensor random_tensor(diff::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(diff::numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Values bounded away from zero so relu stays on one side of its kink.
Tensor off_kink_tensor(diff::Shape shape, std::mt19937_64& rng) {
  Tensor t = random_tensor(std::move(shape), rng);
  for (auto& x : t.mutable_values()) x += x < 0 ? -0.1 : 0.1;
  return t;
}

// Weighted sum so every output element reaches the loss with its own weight.
Tensor reduce(const Tensor& y) {
  std::vector<double> w(y.numel());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.7 * std::sin(1.0 + static_cast<double>(i));
  return diff::sum_all(diff::mul(y, Tensor::from(y.shape(), std::move(w))));
}

}  // namespace

bool GradcheckReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return !checks.empty();
}

GradcheckSuiteOptions default_gradcheck_options() {
  GradcheckSuiteOptions o;
  o.ops = {1e-5, 1e-6, 1e-8};
  o.end_to_end = {1e-5, 1e-4, 1e-4};
  return o;
}

scenedata::SceneSample tiny_scene(std::size_t agents, std::size_t t_f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  scenedata::SceneSample s;
  s.t_h = scenedata::kHistorySteps;
  s.t_f = t_f;
  s.valid.assign(agents * (s.t_h + t_f), 1);
  for (std::size_t a = 0; a < agents; ++a) {
    s.agent_ids.push_back(static_cast<std::int64_t>(a + 1));
    const double x0 = 6.0 * u(rng), y0 = 6.0 * u(rng);
    const double heading = std::numbers::pi * u(rng), speed = 3.0 + u(rng);
    const double vx = speed * std::cos(heading), vy = speed * std::sin(heading);
    for (std::size_t t = 0; t < s.t_h + t_f; ++t) {
      const double time = (static_cast<double>(t) - static_cast<double>(s.t_h - 1)) * scenedata::kFrameDt;
      const double x = x0 + vx * time + 0.05 * u(rng), y = y0 + vy * time + 0.05 * u(rng);
      if (t < s.t_h) {
        for (double f : {x, y, std::cos(heading), std::sin(heading), speed, 1.0, 0.0}) s.history.push_back(f);
      } else {
        s.future_gt.push_back(x);
        s.future_gt.push_back(y);
      }
    }
  }
  return s;
}

std::shared_ptr<const scenegraph::RoadGraph> tiny_road() {
  return std::make_shared<const scenegraph::RoadGraph>(scenegraph::build_road_graph(scenegraph::ring_map(6.0, 2.0)));
}

mapformer::ModelConfig tiny_model_config(mapformer::SaiEncoder saienc, std::size_t t_f) {
  mapformer::ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_dec = 1;
  c.n_gnn = 1;
  c.n_enc = 1;
  c.n_modes = 2;
  c.saienc = saienc;
  c.t_f = t_f;
  c.init_seed = 7;
  return c;
}

GradcheckReport run_gradcheck_suite(const GradcheckSuiteOptions& opts) {
  GradcheckReport report;
  std::mt19937_64 rng(2024);
  const auto check = [&](const std::string& name, std::vector<Tensor> inputs, const std::function<Tensor()>& fn,
                         const diff::GradCheckOptions& o) {
    report.checks.push_back(diff::check_gradients(name, std::move(inputs), fn, o));
  };
  const auto& o = opts.ops;

  {
    Tensor a = random_tensor({2, 3, 4}, rng), w = random_tensor({4, 5}, rng);
    check("matmul", {a, w}, [=] { return reduce(diff::matmul(a, w)); }, o);
  }
  {
    Tensor a = random_tensor({2, 3, 4}, rng), b = random_tensor({2, 4, 2}, rng), c = random_tensor({2, 5, 4}, rng);
    check("bmm", {a, b}, [=] { return reduce(diff::bmm(a, b)); }, o);
    check("bmm_transposed", {a, c}, [=] { return reduce(diff::bmm(a, c, true)); }, o);
  }
  {
    Tensor a = random_tensor({2, 3, 4}, rng), b = random_tensor({4}, rng), c = random_tensor({3, 4}, rng);
    check("add_broadcast", {a, b}, [=] { return reduce(diff::add(a, b)); }, o);
    check("sub_broadcast", {a, c}, [=] { return reduce(diff::sub(a, c)); }, o);
    check("mul_broadcast", {a, c}, [=] { return reduce(diff::mul(a, c)); }, o);
    check("scale_shift", {a}, [=] { return reduce(diff::add_scalar(diff::scale(a, -1.7), 0.3)); }, o);
  }
  {
    Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 2}, rng);
    check("concat", {a, b}, [=] { return reduce(diff::concat({a, b}, -1)); }, o);
    check("slice", {a}, [=] { return reduce(diff::slice(a, 1, 1, 3)); }, o);
    check("reshape", {a}, [=] { return reduce(diff::reshape(a, {3, 2})); }, o);
    check("sum_mean", {a}, [=] { return reduce(diff::add(diff::sum(a, 0), diff::mean(a, 0))); }, o);
  }
  {
    Tensor a = random_tensor({3, 5}, rng, -2.0, 2.0);
    check("softmax", {a}, [=] { return reduce(diff::softmax(a, -1)); }, o);
    check("softmax_axis0", {a}, [=] { return reduce(diff::softmax(a, 0)); }, o);
    check("log_softmax", {a}, [=] { return reduce(diff::log_softmax(a)); }, o);
    check("logsumexp", {a}, [=] { return reduce(diff::logsumexp(a)); }, o);
  }
  {
    Tensor x = random_tensor({2, 3, 6}, rng), g = random_tensor({6}, rng), b = random_tensor({6}, rng);
    check("layer_norm", {x, g, b}, [=] { return reduce(diff::layer_norm(x, g, b)); }, o);
  }
  {
    Tensor a = off_kink_tensor({4, 3}, rng), p = random_tensor({4, 3}, rng, 0.2, 2.0);
    check("relu", {a}, [=] { return reduce(diff::relu(a)); }, o);
    check("softplus", {a}, [=] { return reduce(diff::softplus(a)); }, o);
    check("exp", {a}, [=] { return reduce(diff::exp(a)); }, o);
    check("log", {p}, [=] { return reduce(diff::log(p)); }, o);
    check("square", {a}, [=] { return reduce(diff::square(a)); }, o);
  }
  {
    Tensor x = random_tensor({4, 3}, rng);
    const std::vector<std::size_t> idx{2, 0, 2, 3, 1};
    check("gather_rows", {x}, [=] { return reduce(diff::gather_rows(x, idx)); }, o);
    Tensor m = random_tensor({5, 3}, rng);
    check("scatter_add_rows", {m}, [=] { return reduce(diff::scatter_add_rows(m, idx, 4)); }, o);
  }
  {
    Tensor raw = random_tensor({3, 2, paircov::kParamCount}, rng);
    Tensor mu = random_tensor({3, 2, 4}, rng, -2.0, 2.0), x = random_tensor({3, 2, 4}, rng, -2.0, 2.0);
    const auto params = [raw] {
      return diff::concat({diff::add_scalar(diff::softplus(diff::slice(raw, -1, 0, 4)), 0.05),
                           diff::slice(raw, -1, 4, paircov::kParamCount)},
                          -1);
    };
    check("mgnll", {raw, mu, x}, [=] { return reduce(paircov::mgnll_loss(params(), mu, x)); }, o);
  }

  if (opts.include_end_to_end) {
    const std::size_t t_f = 5;
    const auto sample = tiny_scene(3, t_f, 11);
    const auto graph = scenegraph::attach_agents(tiny_road(), sample, 4.0);
    for (auto enc : {mapformer::SaiEncoder::none, mapformer::SaiEncoder::gnn, mapformer::SaiEncoder::attention}) {
      auto model = std::make_shared<mapformer::MapFormer>(tiny_model_config(enc, t_f));
      const auto* g = enc == mapformer::SaiEncoder::none ? nullptr : &graph;
      check("end_to_end_" + mapformer::to_string(enc), model->parameters().tensors(),
            [model, &sample, g] { return mapformer::scene_loss(model->forward(sample, g), sample, {}).total; },
            opts.end_to_end);
    }
  }
  return report;
}

void print_gradcheck_report(std::ostream& out, const GradcheckReport& report) {
  char buf[160];
  for (const auto& c : report.checks) {
    std::snprintf(buf, sizeof(buf), "%-24s %s  max_rel_err=%.3e  n=%zu\n", c.name.c_str(), c.passed ? "PASS" : "FAIL",
                  c.max_rel_error, c.n_checked);
    out << buf;
  }
  out << (report.all_passed() ? "all checks passed" : "gradient check FAILED") << '\n';
}

}  // namespace pairpred::app
