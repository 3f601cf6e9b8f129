// Copyright 2026 The bilevel-svr Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bilevel/svr.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bilevel/error.hpp"

namespace bilevel {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void split_half(SvrInstance& inst) {
  const int in_count = (inst.samples + 1) / 2;
  inst.in_idx.clear();
  inst.out_idx.clear();
  for (int i = 0; i < inst.samples; ++i) (i < in_count ? inst.in_idx : inst.out_idx).push_back(i);
}

}  // namespace

std::string instance_name(int samples, int features) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%d/%02d", samples, features);
  return buf;
}

std::string SvrInstance::name() const { return instance_name(samples, features); }

std::pair<int, int> parse_instance_name(std::string_view name) {
  const auto slash = name.find('/');
  int s = 0, f = 0;
  if (slash == std::string_view::npos) throw Error(ErrorCode::kParse, "instance name needs S/F");
  auto a = std::from_chars(name.data(), name.data() + slash, s);
  auto b = std::from_chars(name.data() + slash + 1, name.data() + name.size(), f);
  if (a.ec != std::errc{} || a.ptr != name.data() + slash || b.ec != std::errc{} ||
      b.ptr != name.data() + name.size() || s < 1 || f < 1) {
    throw Error(ErrorCode::kParse, "bad instance name '" + std::string(name) + "'");
  }
  return {s, f};
}

double unit_uniform(std::uint64_t draw) { return static_cast<double>(draw >> 11) * 0x1.0p-53; }

SvrInstance generate_instance(int samples, int features, std::uint64_t seed, double noise_amp) {
  if (samples < 2 || features < 1) {
    throw Error(ErrorCode::kInvalidInstance, "need samples >= 2 and features >= 1, got " +
                                                 std::to_string(samples) + " and " +
                                                 std::to_string(features));
  }
  SvrInstance inst;
  inst.samples = samples;
  inst.features = features;
  inst.seed = seed;
  inst.noise_amp = noise_amp;
  std::mt19937_64 rng(seed);
  auto symmetric = [&] { return 2.0 * unit_uniform(rng()) - 1.0; };
  inst.x.resize(samples, features);
  for (int i = 0; i < samples; ++i)
    for (int j = 0; j < features; ++j) inst.x(i, j) = symmetric();
  inst.y = inst.x.rowwise().sum();
  for (int i = 0; i < samples; ++i) inst.y[i] += noise_amp * symmetric();
  split_half(inst);
  return inst;
}

SvrInstance make_instance(Eigen::MatrixXd x, Eigen::VectorXd y, int in_sample) {
  if (x.rows() != y.size() || x.rows() < 1 || x.cols() < 1 || in_sample < 0 ||
      in_sample > x.rows()) {
    throw Error(ErrorCode::kInvalidInstance, "inconsistent instance data");
  }
  SvrInstance inst;
  inst.samples = static_cast<int>(x.rows());
  inst.features = static_cast<int>(x.cols());
  inst.x = std::move(x);
  inst.y = std::move(y);
  inst.noise_amp = 0.0;
  for (int i = 0; i < inst.samples; ++i) (i < in_sample ? inst.in_idx : inst.out_idx).push_back(i);
  return inst;
}

SvrModel build_bilevel(const SvrInstance& inst) {
  SvrModel m;
  auto& model = m.model;
  m.c = model.add_variable(Level::kUpper, 0.0, kInf, "C");
  m.eps = model.add_variable(Level::kUpper, 0.0, kInf, "eps");
  for (int i : inst.out_idx) {
    m.xi_upper.push_back(model.add_variable(Level::kUpper, 0.0, kInf, "xi_U_" + std::to_string(i + 1)));
  }
  for (int j = 0; j < inst.features; ++j) {
    m.w.push_back(model.add_variable(Level::kLower, -kInf, kInf, "w_" + std::to_string(j + 1)));
  }
  for (int i : inst.in_idx) {
    m.xi_lower.push_back(model.add_variable(Level::kLower, 0.0, kInf, "xi_L_" + std::to_string(i + 1)));
  }

  auto prediction = [&](int i) {
    AffineExpr e;
    for (int j = 0; j < inst.features; ++j) e.add_term(m.w[j], inst.x(i, j));
    return e;
  };

  AffineExpr upper_obj;
  for (VarId v : m.xi_upper) upper_obj += AffineExpr(v);
  model.set_objective(Level::kUpper, ObjSense::kMin, upper_obj);

  // xi_U >= y - x.w  and  xi_U >= -y + x.w
  for (std::size_t k = 0; k < inst.out_idx.size(); ++k) {
    const int i = inst.out_idx[k];
    model.add_constraint(Level::kUpper, AffineExpr(m.xi_upper[k]) + prediction(i), Sense::kGE,
                         inst.y[i], "upper_pos_" + std::to_string(i + 1));
  }
  for (std::size_t k = 0; k < inst.out_idx.size(); ++k) {
    const int i = inst.out_idx[k];
    model.add_constraint(Level::kUpper, AffineExpr(m.xi_upper[k]) - prediction(i), Sense::kGE,
                         -inst.y[i], "upper_neg_" + std::to_string(i + 1));
  }

  QuadExpr lower_obj;
  for (VarId w : m.w) lower_obj.add_quad_term(w, w, 1.0);
  for (VarId xi : m.xi_lower) lower_obj.add_quad_term(m.c, xi, 1.0);
  model.set_objective(Level::kLower, ObjSense::kMin, lower_obj);

  // xi_L + eps >= y - x.w  and  xi_L + eps >= -y + x.w
  for (std::size_t k = 0; k < inst.in_idx.size(); ++k) {
    const int i = inst.in_idx[k];
    model.add_constraint(Level::kLower, AffineExpr(m.xi_lower[k]) + AffineExpr(m.eps) + prediction(i),
                         Sense::kGE, inst.y[i], "lower_pos_" + std::to_string(i + 1));
  }
  for (std::size_t k = 0; k < inst.in_idx.size(); ++k) {
    const int i = inst.in_idx[k];
    model.add_constraint(Level::kLower, AffineExpr(m.xi_lower[k]) + AffineExpr(m.eps) - prediction(i),
                         Sense::kGE, -inst.y[i], "lower_neg_" + std::to_string(i + 1));
  }
  return m;
}

double upper_loss(const SvrInstance& inst, const Eigen::VectorXd& w) {
  if (w.size() != inst.features) {
    throw Error(ErrorCode::kDimensionMismatch, "w has " + std::to_string(w.size()) +
                                                   " entries, instance has " +
                                                   std::to_string(inst.features) + " features");
  }
  double loss = 0.0;
  for (int i : inst.out_idx) loss += std::abs(inst.y[i] - inst.x.row(i).dot(w));
  return loss;
}

void write_instance_csv(const SvrInstance& inst, std::ostream& csv) {
  for (int j = 0; j < inst.features; ++j) csv << "x_" << (j + 1) << ",";
  csv << "y,split\n";
  std::vector<bool> in(static_cast<std::size_t>(inst.samples), false);
  for (int i : inst.in_idx) in[static_cast<std::size_t>(i)] = true;
  for (int i = 0; i < inst.samples; ++i) {
    for (int j = 0; j < inst.features; ++j) csv << format_double(inst.x(i, j)) << ",";
    csv << format_double(inst.y[i]) << "," << (in[static_cast<std::size_t>(i)] ? "in" : "out") << "\n";
  }
}

void write_instance_sidecar(const SvrInstance& inst, std::ostream& json) {
  nlohmann::ordered_json j;
  j["name"] = inst.name();
  j["samples"] = inst.samples;
  j["features"] = inst.features;
  j["seed"] = inst.seed;
  j["noise_amp"] = inst.noise_amp;
  j["in_sample"] = inst.in_idx.size();
  j["generator"] = "std::mt19937_64";
  j["uniform"] = "u = (draw >> 11) * 2^-53, value = 2u - 1";
  j["draw_order"] = "x row-major, then noise per sample";
  nlohmann::ordered_json columns = nlohmann::ordered_json::array();
  for (int f = 0; f < inst.features; ++f) columns.push_back("x_" + std::to_string(f + 1));
  columns.push_back("y");
  columns.push_back("split");
  j["columns"] = columns;
  json << j.dump(2) << "\n";
}

SvrInstance read_instance_csv(std::istream& csv, std::istream* sidecar) {
  std::string line;
  if (!std::getline(csv, line)) throw Error(ErrorCode::kParse, "empty instance CSV");
  int features = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      if (cell.rfind("x_", 0) == 0) ++features;
    }
  }
  if (features < 1) throw Error(ErrorCode::kParse, "instance CSV has no x_ columns");
  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  std::vector<int> in_idx, out_idx;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != features + 2) {
      throw Error(ErrorCode::kParse, "row " + std::to_string(rows.size() + 1) + " has " +
                                         std::to_string(cells.size()) + " cells");
    }
    std::vector<double> xs;
    try {
      for (int j = 0; j < features; ++j) xs.push_back(std::stod(cells[j]));
      ys.push_back(std::stod(cells[features]));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "non-numeric cell in row " + std::to_string(rows.size() + 1));
    }
    const int index = static_cast<int>(rows.size());
    if (cells[features + 1] == "in") in_idx.push_back(index);
    else if (cells[features + 1] == "out") out_idx.push_back(index);
    else throw Error(ErrorCode::kParse, "split must be 'in' or 'out'");
    rows.push_back(std::move(xs));
  }
  SvrInstance inst;
  inst.samples = static_cast<int>(rows.size());
  inst.features = features;
  inst.x.resize(inst.samples, features);
  inst.y.resize(inst.samples);
  for (int i = 0; i < inst.samples; ++i) {
    for (int j = 0; j < features; ++j) inst.x(i, j) = rows[i][j];
    inst.y[i] = ys[i];
  }
  inst.in_idx = std::move(in_idx);
  inst.out_idx = std::move(out_idx);
  if (sidecar) {
    try {
      const auto j = nlohmann::json::parse(*sidecar);
      inst.seed = j.value("seed", std::uint64_t{0});
      inst.noise_amp = j.value("noise_amp", 0.1);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, std::string("sidecar: ") + e.what());
    }
  }
  return inst;
}

}  // namespace bilevel
