// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "wavestream/costmodel/costmodel.hpp"

namespace wavestream::cost {

struct Table2Row {
  std::string name;
  CostBreakdown cost;
};

inline std::vector<Table2Row> table2_rows() {
  std::vector<Table2Row> out;
  for (const auto& g : table2_geometries()) out.push_back({g.name, im2col_cost(g.geometry, g.height)});
  return out;
}

inline std::string symbolic(const Linear& l) {
  if (l.slope == 0) return std::to_string(l.intercept);
  std::string s = std::to_string(l.slope) + " x T";
  if (l.intercept) s += " + " + std::to_string(l.intercept);
  return s;
}

/// CSV: layer, symbolic X / Y / MACs, then their values at T = t.
inline void write_table2(std::ostream& os, std::uint64_t t = 1) {
  os << "layer,column_size,filter_size,macs,column_size_at_T" << t << ",filter_size_at_T" << t << ",macs_at_T" << t
     << "\n";
  for (const auto& r : table2_rows())
    os << r.name << ',' << symbolic(r.cost.column_size) << ',' << symbolic(r.cost.filter_size) << ','
       << symbolic(r.cost.macs) << ',' << r.cost.column_size.at(t) << ',' << r.cost.filter_size.at(t) << ','
       << r.cost.macs.at(t) << "\n";
}

inline void write_aggregate(std::ostream& os) {
  const auto v = aggregate_profile(BlockKind::vocos_1d), w = aggregate_profile(BlockKind::wavehax_2d);
  os << "profile,aggregate,slope,intercept\n";
  for (const auto* p : {&v, &w})
    os << block_kind_name(p->kind) << ',' << symbolic(p->aggregate()) << ',' << p->aggregate().slope << ','
       << p->aggregate().intercept << "\n";
  if (const auto t = crossover_chunk(v, w)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", *t);
    os << "# crossover T* = " << buf << "\n";
  } else {
    os << "# no crossover\n";
  }
}

inline void write_model_counts(std::ostream& os, const Model& model) {
  const ModelCount matrix = count_model(model, StftAccounting::transform_as_matrix);
  const ModelCount excluded = count_model(model, StftAccounting::transform_excluded);
  const std::uint64_t fps = model.config().sample_rate / model.config().hop;
  os << "# model " << model.config().name() << ", " << fps << " frames per second\n";
  os << "layer,weights,biases,macs_per_second\n";
  for (const auto& l : matrix.layers)
    os << l.name << ',' << l.weights << ',' << l.biases << ',' << l.macs_per_frame * fps << "\n";
  os << "total," << matrix.parameters() << ",," << matrix.macs_per_frame() * fps << "\n";
  os << "# MACs/s with transforms excluded: " << excluded.macs_per_frame() * fps << "\n";
}

}  // namespace wavestream::cost
