#ifndef MLSELECT_REPORT_HPP
#define MLSELECT_REPORT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlselect/stats.hpp"
#include "mlselect/util.hpp"

namespace mlselect {
inline constexpr const char* kToolVersion = "0.1.0";
}

namespace mlselect::report {

/// Written alongside every command output for reproducibility.
struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> args;
  std::uint64_t seed = 0;
  std::string output;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["inputs"] = inputs;
    j["args"] = args;
    j["seed"] = seed;
    j["output"] = output;
    j["tool_version"] = kToolVersion;
    const auto now = std::chrono::system_clock::now();
    j["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    return j;
  }

  void write(const std::string& path) const { util::write_file(path, to_json().dump(2) + "\n"); }
};

struct AnalysisRow {
  std::string condition;
  double mean_reward = 0.0;
  double statistic = 0.0;   // U against the baseline
  double p_value = 1.0;
  double bh_threshold = 0.0;
  bool rejected = false;
};

struct TaskAnalysis {
  std::string task;
  std::vector<AnalysisRow> rows;  // ascending p-value, the BH order
};

struct RelativeRewardRow {
  std::string task;
  std::string condition;
  double mean_reward = 0.0;
  double rr = 0.0;
};

struct Analysis {
  double q = 0.2;
  std::string baseline;
  bool p_only = false;
  std::vector<double> alpha_levels;
  std::vector<TaskAnalysis> tasks;
  std::vector<RelativeRewardRow> relative_rewards;
  std::optional<stats::RankReversalGraph> rank_reversal;
};

inline nlohmann::json analysis_to_json(const Analysis& a) {
  nlohmann::json j;
  j["q"] = a.q;
  j["baseline"] = a.baseline;
  j["p_only"] = a.p_only;
  j["alpha_levels"] = a.alpha_levels;
  auto tasks = nlohmann::json::array();
  for (const TaskAnalysis& t : a.tasks) {
    nlohmann::json jt;
    jt["task"] = t.task;
    auto rows = nlohmann::json::array();
    for (const AnalysisRow& r : t.rows) {
      nlohmann::json jr;
      jr["condition"] = r.condition;
      jr["mean_reward"] = r.mean_reward;
      jr["statistic"] = r.statistic;
      jr["p_value"] = r.p_value;
      jr["bh_threshold"] = r.bh_threshold;
      jr["rejected"] = r.rejected;
      rows.push_back(std::move(jr));
    }
    jt["rows"] = std::move(rows);
    tasks.push_back(std::move(jt));
  }
  j["tasks"] = std::move(tasks);
  auto rrs = nlohmann::json::array();
  for (const RelativeRewardRow& r : a.relative_rewards) {
    nlohmann::json jr;
    jr["task"] = r.task;
    jr["condition"] = r.condition;
    jr["mean_reward"] = r.mean_reward;
    jr["rr"] = r.rr;
    rrs.push_back(std::move(jr));
  }
  j["relative_rewards"] = std::move(rrs);
  if (a.rank_reversal) {
    const stats::RankReversalGraph& g = *a.rank_reversal;
    nlohmann::json jg;
    jg["tasks"] = g.tasks;
    jg["conditions"] = g.conditions;
    auto edges = nlohmann::json::array();
    for (const stats::RankEdge& e : g.edges) {
      nlohmann::json je;
      je["task"] = e.task;
      je["winner"] = e.winner;
      je["loser"] = e.loser;
      je["alpha"] = e.alpha;
      je["p_value"] = e.p_value;
      edges.push_back(std::move(je));
    }
    jg["edges"] = std::move(edges);
    auto reversals = nlohmann::json::array();
    for (const stats::ReversalPair& r : g.reversals) {
      nlohmann::json jr;
      jr["condition_a"] = r.condition_a;
      jr["condition_b"] = r.condition_b;
      jr["task_a"] = r.task_a;
      jr["task_b"] = r.task_b;
      reversals.push_back(std::move(jr));
    }
    jg["reversals"] = std::move(reversals);
    jg["universal_features"] = g.universal_features;
    jg["warnings"] = g.warnings;
    j["rank_reversal"] = std::move(jg);
  }
  return j;
}

inline Analysis analysis_from_json(const nlohmann::json& j) {
  Analysis a;
  a.q = j.value("q", 0.2);
  a.baseline = j.value("baseline", std::string());
  a.p_only = j.value("p_only", false);
  a.alpha_levels = j.value("alpha_levels", std::vector<double>{});
  for (const auto& jt : j.value("tasks", nlohmann::json::array())) {
    TaskAnalysis t;
    t.task = jt.at("task").get<std::string>();
    for (const auto& jr : jt.at("rows")) {
      AnalysisRow r;
      r.condition = jr.at("condition").get<std::string>();
      r.mean_reward = jr.at("mean_reward").get<double>();
      r.statistic = jr.at("statistic").get<double>();
      r.p_value = jr.at("p_value").get<double>();
      r.bh_threshold = jr.at("bh_threshold").get<double>();
      r.rejected = jr.at("rejected").get<bool>();
      t.rows.push_back(std::move(r));
    }
    a.tasks.push_back(std::move(t));
  }
  if (j.contains("relative_rewards")) {
    for (const auto& jr : j.at("relative_rewards")) {
      RelativeRewardRow r;
      r.task = jr.at("task").get<std::string>();
      r.condition = jr.at("condition").get<std::string>();
      r.mean_reward = jr.at("mean_reward").get<double>();
      r.rr = jr.at("rr").get<double>();
      a.relative_rewards.push_back(std::move(r));
    }
  }
  if (j.contains("rank_reversal")) {
    const auto& jg = j.at("rank_reversal");
    stats::RankReversalGraph g;
    g.tasks = jg.at("tasks").get<std::vector<std::string>>();
    g.conditions = jg.at("conditions").get<std::vector<std::string>>();
    for (const auto& je : jg.at("edges"))
      g.edges.push_back({je.at("task").get<std::string>(), je.at("winner").get<std::string>(),
                         je.at("loser").get<std::string>(), je.at("alpha").get<double>(),
                         je.at("p_value").get<double>()});
    for (const auto& jr : jg.at("reversals"))
      g.reversals.push_back({jr.at("condition_a").get<std::string>(),
                             jr.at("condition_b").get<std::string>(),
                             jr.at("task_a").get<std::string>(), jr.at("task_b").get<std::string>()});
    g.universal_features = jg.at("universal_features").get<std::vector<std::string>>();
    g.warnings = jg.at("warnings").get<std::vector<std::string>>();
    a.rank_reversal = std::move(g);
  }
  return a;
}

// Significance tables mirroring the columns Feature / Rew. / p-val. / i/m.
// Numbers print with 17 significant digits so the text form parses back to
// the identical analysis.

inline std::string tables_to_text(const Analysis& a) {
  std::ostringstream out;
  for (const TaskAnalysis& t : a.tasks) {
    out << "== task: " << t.task << " | baseline: " << a.baseline << " | q: "
        << util::format_double(a.q) << " ==\n";
    out << "Feature | Rew. | U | p-val. | i/m | significant\n";
    for (const AnalysisRow& r : t.rows) {
      if (r.condition.find('|') != std::string::npos)
        throw std::invalid_argument("condition labels must not contain '|'");
      out << r.condition << " | " << util::format_double(r.mean_reward) << " | "
          << util::format_double(r.statistic) << " | " << util::format_double(r.p_value) << " | "
          << util::format_double(r.bh_threshold) << " | " << (r.rejected ? "yes" : "no") << "\n";
    }
    out << "\n";
  }
  return out.str();
}

inline Analysis tables_from_text(const std::string& text) {
  Analysis a;
  std::istringstream in(text);
  std::string line;
  TaskAnalysis* current = nullptr;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = util::trim(line);
    if (t.empty()) continue;
    if (t.rfind("== task: ", 0) == 0) {
      const std::string body = t.substr(3, t.size() - 6);  // strip "== " and " =="
      const std::vector<std::string> parts = util::split(body, '|');
      if (parts.size() != 3) throw ParseError("<table>:" + std::to_string(lineno) + ": bad header");
      TaskAnalysis ta;
      ta.task = util::trim(util::split(parts[0], ':')[1]);
      a.baseline = util::trim(util::split(parts[1], ':')[1]);
      a.q = util::parse_double(util::trim(util::split(parts[2], ':')[1]), "<table>", lineno);
      a.tasks.push_back(std::move(ta));
      current = &a.tasks.back();
      continue;
    }
    if (t.rfind("Feature |", 0) == 0) continue;
    if (current == nullptr) throw ParseError("<table>:" + std::to_string(lineno) + ": row before header");
    const std::vector<std::string> cells = util::split(t, '|');
    if (cells.size() != 6) throw ParseError("<table>:" + std::to_string(lineno) + ": expected 6 cells");
    AnalysisRow r;
    r.condition = util::trim(cells[0]);
    r.mean_reward = util::parse_double(util::trim(cells[1]), "<table>", lineno);
    r.statistic = util::parse_double(util::trim(cells[2]), "<table>", lineno);
    r.p_value = util::parse_double(util::trim(cells[3]), "<table>", lineno);
    r.bh_threshold = util::parse_double(util::trim(cells[4]), "<table>", lineno);
    r.rejected = util::trim(cells[5]) == "yes";
    current->rows.push_back(std::move(r));
  }
  return a;
}

// ---- SVG rendering ------------------------------------------------------
// Pure presentation of prior outputs; no new computation happens here.

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

inline std::string header(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + num(width) + " " +
         num(height) + "\" font-family=\"monospace\" font-size=\"11\">\n";
}

inline std::string text(double x, double y, const std::string& s, const std::string& extra = "") {
  return "  <text x=\"" + num(x) + "\" y=\"" + num(y) + "\"" + (extra.empty() ? "" : " " + extra) +
         ">" + s + "</text>\n";
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill) {
  return "  <rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
         num(h) + "\" fill=\"" + fill + "\"/>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, const std::string& stroke,
                        double width = 1.0, const std::string& extra = "") {
  return "  <line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
         num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"" +
         (extra.empty() ? "" : " " + extra) + "/>\n";
}

}  // namespace svg

/// Mean-reward bars per task; significant conditions in red, like the
/// source figures' highlighted bars.
inline std::string render_reward_bars(const Analysis& a) {
  const double row_h = 16.0, block_gap = 30.0, left = 150.0, bar_max = 300.0;
  double height = 30.0;
  for (const TaskAnalysis& t : a.tasks)
    height += 20.0 + static_cast<double>(t.rows.size()) * row_h + block_gap;
  height = std::max(height, 60.0);
  std::ostringstream out;
  out << svg::header(520.0, height);
  double y = 20.0;
  if (a.tasks.empty()) out << svg::text(10.0, y, "no analysis rows");
  for (const TaskAnalysis& t : a.tasks) {
    out << svg::text(10.0, y, "task: " + t.task);
    y += 20.0;
    double lo = 0.0, hi = 0.0;
    for (const AnalysisRow& r : t.rows) {
      lo = std::min(lo, r.mean_reward);
      hi = std::max(hi, r.mean_reward);
    }
    const double span = hi - lo > 0.0 ? hi - lo : 1.0;
    const double zero_x = left + (0.0 - lo) / span * bar_max;
    for (const AnalysisRow& r : t.rows) {
      const double vx = left + (r.mean_reward - lo) / span * bar_max;
      const double bx = std::min(zero_x, vx);
      const double bw = std::max(1.0, std::fabs(vx - zero_x));
      out << svg::text(10.0, y + 11.0, r.condition);
      out << svg::rect(bx, y + 2.0, bw, row_h - 4.0, r.rejected ? "#c0392b" : "#7f8c8d");
      out << svg::text(left + bar_max + 8.0, y + 11.0, svg::num(r.mean_reward));
      y += row_h;
    }
    y += block_gap;
  }
  out << "</svg>\n";
  return out.str();
}

struct CurvePoint {
  int iteration = 0;
  double train = 0.0;
  std::optional<double> eval;
};

/// Train/test reward overlay across iterations.
inline std::string render_curves(const std::vector<CurvePoint>& series) {
  const double w = 520.0, h = 300.0, ml = 50.0, mb = 40.0, mt = 20.0, mr = 20.0;
  std::ostringstream out;
  out << svg::header(w, h);
  out << svg::line(ml, h - mb, w - mr, h - mb, "#333333");
  out << svg::line(ml, mt, ml, h - mb, "#333333");
  if (series.empty()) {
    out << svg::text(ml + 10.0, (h - mb + mt) / 2.0, "no curve data");
    out << "</svg>\n";
    return out.str();
  }
  double lo = 0.0, hi = 0.0;
  int it_max = 1;
  for (const CurvePoint& p : series) {
    lo = std::min({lo, p.train, p.eval.value_or(p.train)});
    hi = std::max({hi, p.train, p.eval.value_or(p.train)});
    it_max = std::max(it_max, p.iteration);
  }
  const double span = hi - lo > 0.0 ? hi - lo : 1.0;
  const auto px = [&](int it) { return ml + (w - ml - mr) * static_cast<double>(it) / static_cast<double>(it_max); };
  const auto py = [&](double v) { return h - mb - (h - mb - mt) * (v - lo) / span; };
  const auto polyline = [&](const std::string& color, bool use_eval) {
    std::string pts;
    for (const CurvePoint& p : series) {
      if (use_eval && !p.eval) continue;
      const double v = use_eval ? *p.eval : p.train;
      pts += svg::num(px(p.iteration)) + "," + svg::num(py(v)) + " ";
    }
    if (pts.empty()) return std::string();
    return "  <polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"/>\n";
  };
  out << polyline("#2980b9", false);
  out << polyline("#c0392b", true);
  out << svg::text(ml + 10.0, mt + 12.0, "train", "fill=\"#2980b9\"");
  out << svg::text(ml + 60.0, mt + 12.0, "test", "fill=\"#c0392b\"");
  out << svg::text(ml, h - 10.0, "iteration");
  out << svg::text(lo == hi ? ml : 5.0, mt + 6.0, svg::num(hi));
  out << svg::text(5.0, h - mb, svg::num(lo));
  out << "</svg>\n";
  return out.str();
}

/// Rank-reversal arrow graph: conditions on a circle, edges pointing at the
/// winner, heavier strokes for smaller alpha levels.
inline std::string render_rank_reversal(const std::optional<stats::RankReversalGraph>& graph,
                                        const std::vector<double>& alpha_levels) {
  const double w = 420.0, h = 420.0, cx = w / 2.0, cy = h / 2.0, radius = 150.0;
  std::ostringstream out;
  out << svg::header(w, h);
  out << "  <defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"7\" refY=\"3\" "
         "orient=\"auto\"><path d=\"M0,0 L7,3 L0,6 z\" fill=\"#333333\"/></marker></defs>\n";
  if (!graph || graph->conditions.empty()) {
    out << svg::text(cx - 60.0, cy, "no rank-reversal data");
    out << "</svg>\n";
    return out.str();
  }
  const stats::RankReversalGraph& g = *graph;
  std::map<std::string, std::pair<double, double>> position;
  const std::size_t n = g.conditions.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * 3.14159265358979 * static_cast<double>(i) / static_cast<double>(n);
    position[g.conditions[i]] = {cx + radius * std::cos(angle), cy + radius * std::sin(angle)};
  }
  const std::vector<std::string> palette = {"#2980b9", "#c0392b", "#27ae60", "#8e44ad"};
  std::map<std::string, std::string> task_color;
  for (std::size_t i = 0; i < g.tasks.size(); ++i)
    task_color[g.tasks[i]] = palette[i % palette.size()];
  for (const stats::RankEdge& e : g.edges) {
    const auto [x1, y1] = position[e.loser];
    const auto [x2, y2] = position[e.winner];
    // pull the arrowhead short of the node label
    const double dx = x2 - x1, dy = y2 - y1;
    const double len = std::hypot(dx, dy);
    const double tx = x2 - dx / len * 18.0, ty = y2 - dy / len * 18.0;
    double width = 1.0;
    for (std::size_t i = 0; i < alpha_levels.size(); ++i)
      if (e.alpha == alpha_levels[i]) width = 1.0 + 0.8 * static_cast<double>(i);
    out << svg::line(x1, y1, tx, ty, task_color[e.task], width, "marker-end=\"url(#arrow)\"");
  }
  for (const std::string& c : g.conditions) {
    const auto [x, y] = position[c];
    out << svg::text(x - 4.0 * static_cast<double>(c.size()) / 2.0, y - 8.0, c);
  }
  double ly = 16.0;
  for (const auto& [task, color] : task_color) {
    out << svg::text(10.0, ly, task, "fill=\"" + color + "\"");
    ly += 14.0;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace mlselect::report

#endif  // MLSELECT_REPORT_HPP
