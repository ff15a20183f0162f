#include "asmsleep/policy_io.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "asmsleep/errors.hpp"

namespace asmsleep {

using nlohmann::json;

void write_policy_json(std::ostream& out, const PolicyDocument& doc) {
  json states = json::array();
  for (const PolicyEntry& e : doc.policy.entries) {
    states.push_back({
        {"elapsed_ns", e.elapsed.count()},
        {"prev_level", e.prev_level ? json(std::string(to_string(*e.prev_level)))
                                    : json(nullptr)},
        {"chosen_level", std::string(to_string(e.choice))},
        {"value", e.value},
    });
  }
  json blocks = json::array();
  for (const PolicyBlock& b : doc.policy.blocks) {
    blocks.push_back({{"start_ns", b.start.count()},
                      {"level", std::string(to_string(b.level))}});
  }
  const json root = {
      {"format", kPolicyFormat},
      {"state_space_digest", doc.state_space_digest},
      {"weights",
       {{"eps1", doc.weights.delay},
        {"eps2", doc.weights.energy},
        {"eps3", doc.weights.switching}}},
      {"normalization",
       {{"mode", std::string(to_string(doc.normalization_mode))},
        {"delay_s", doc.normalization.delay_s},
        {"energy_j", doc.normalization.energy_j}}},
      {"states", std::move(states)},
      {"block_sequence", std::move(blocks)},
  };
  out << root.dump(1) << '\n';
}

namespace {

LevelId level_from(const json& j) {
  const auto id = parse_level_id(j.get<std::string>());
  if (!id) throw IoError("unknown sleep level " + j.dump());
  return *id;
}

}  // namespace

PolicyDocument read_policy_json(std::istream& in) {
  try {
    const json root = json::parse(in);
    if (root.at("format").get<std::string>() != kPolicyFormat) {
      throw IoError("unsupported policy format " + root.at("format").dump());
    }
    PolicyDocument doc;
    doc.state_space_digest = root.at("state_space_digest").get<std::string>();
    const json& w = root.at("weights");
    doc.weights = CostWeights::make(w.at("eps1").get<double>(),
                                    w.at("eps2").get<double>(),
                                    w.at("eps3").get<double>());
    const json& norm = root.at("normalization");
    const auto mode = parse_normalization(norm.at("mode").get<std::string>());
    if (!mode) throw IoError("unknown normalization mode");
    doc.normalization_mode = *mode;
    doc.normalization = {norm.at("delay_s").get<double>(),
                         norm.at("energy_j").get<double>()};
    for (const json& s : root.at("states")) {
      PolicyEntry e{Nanos{s.at("elapsed_ns").get<std::int64_t>()},
                    std::nullopt, level_from(s.at("chosen_level")),
                    s.at("value").get<double>()};
      if (!s.at("prev_level").is_null()) e.prev_level = level_from(s.at("prev_level"));
      doc.policy.entries.push_back(e);
    }
    for (const json& b : root.at("block_sequence")) {
      doc.policy.blocks.push_back(PolicyBlock{
          Nanos{b.at("start_ns").get<std::int64_t>()}, level_from(b.at("level"))});
    }
    return doc;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed policy document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("malformed policy document: ") + e.what());
  }
}

void write_timeline_csv(std::ostream& out, const Policy& policy) {
  out << "start_s,level\n";
  std::ostringstream row;
  row << std::setprecision(12);
  for (const PolicyBlock& b : policy.blocks) {
    row << to_seconds(b.start) << ',' << to_string(b.level) << '\n';
  }
  out << row.str();
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + '"';
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const SweepRow> rows) {
  std::ostringstream csv;
  csv << std::setprecision(12);
  csv << "# format: " << kResultsFormat << '\n'
      << "eps1,eps2,eps3,status,policy_digest,policy_blocks,policy_switches,"
         "policy_runs,n_periods,energy_reduction,energy_reduction_se,"
         "mean_delay_s,mean_delay_se,mean_wake_time_s,mean_wake_time_se,"
         "mean_switches,mean_switches_se,mean_cost,mean_cost_se,"
         "w_SM1,w_SM2,w_SM3,w_SM4\n";
  for (const SweepRow& row : rows) {
    csv << row.weights.delay << ',' << row.weights.energy << ','
        << row.weights.switching << ',' << csv_quote(row.status) << ',';
    if (row.policy) {
      csv << row.policy->digest << ',' << row.policy->blocks << ','
          << row.policy->switches << ',' << csv_quote(row.policy->runs) << ',';
    } else {
      csv << ",,,,";
    }
    if (row.metrics) {
      const SimMetrics& m = *row.metrics;
      csv << m.n_periods << ',' << m.energy_reduction.value << ','
          << m.energy_reduction.std_error << ',' << m.mean_delay_s.value << ','
          << m.mean_delay_s.std_error << ',' << m.mean_wake_time_s.value << ','
          << m.mean_wake_time_s.std_error << ',' << m.mean_switches.value << ','
          << m.mean_switches.std_error << ',';
      if (m.mean_cost) {
        csv << m.mean_cost->value << ',' << m.mean_cost->std_error;
      } else {
        csv << ',';
      }
      for (double share : m.level_shares) csv << ',' << share;
      csv << '\n';
    } else {
      csv << ",,,,,,,,,,,,,,\n";
    }
  }
  out << csv.str();
}

void write_trace_jsonl(std::ostream& out, const IdleTrace& trace) {
  json blocks = json::array();
  for (const TraceBlock& b : trace.blocks) {
    blocks.push_back({std::string(to_string(b.level)), b.start_s, b.end_s});
  }
  const json line = {{"tau_s", trace.tau_s},
                     {"wake_time_s", trace.wake_time_s()},
                     {"added_delay_s", trace.added_delay_s},
                     {"energy_j", trace.energy_j},
                     {"switches", trace.switches},
                     {"blocks", std::move(blocks)}};
  out << line.dump() << '\n';
}

}  // namespace asmsleep
