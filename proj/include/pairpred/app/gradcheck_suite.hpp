#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "pairpred/diffcore/gradcheck.hpp"
#include "pairpred/mapformer/model.hpp"
#include "pairpred/scenegraph.hpp"

namespace pairpred::app {

struct GradcheckReport {
  std::vector<diff::GradCheckResult> checks;
  bool all_passed() const;
};

struct GradcheckSuiteOptions {
  diff::GradCheckOptions ops;         // single-op and MGNLL checks
  diff::GradCheckOptions end_to_end;  // whole-model checks
  bool include_end_to_end = true;
};

GradcheckSuiteOptions default_gradcheck_options();

/// Finite-difference checks of every differentiable op, the MGNLL loss and
/// tiny end-to-end models (one per spatial encoder variant).
GradcheckReport run_gradcheck_suite(const GradcheckSuiteOptions& opts = default_gradcheck_options());

void print_gradcheck_report(std::ostream& out, const GradcheckReport& report);

/// Small random scene: `agents` agents, full validity, t_h = 5.
scenedata::SceneSample tiny_scene(std::size_t agents, std::size_t t_f, std::uint64_t seed);
/// Ring road around the tiny scene.
std::shared_ptr<const scenegraph::RoadGraph> tiny_road();

/// d_model 16 with one layer per stage.
mapformer::ModelConfig tiny_model_config(mapformer::SaiEncoder saienc, std::size_t t_f);

}  // namespace pairpred::app
