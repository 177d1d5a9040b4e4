#pragma once

// Instance serialization.
//
// Plain-text format, one record per line, '#' starts a comment:
//
//   tsg-instance 1
//   budget <B>
//   seed <u64>
//   item <id> <cost> <tag> <params...>
//
// with tags `bernoulli <mean>`, `exponential <mean>`, `pareto <shape> <scale>`,
// `deterministic <value>`, `empirical <count> <v1> ... <vcount>`.
// The JSON form carries the same fields. Doubles are written in shortest
// round-trip form, so both formats reproduce every bit.

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tsg/distribution.hpp"
#include "tsg/format.hpp"
#include "tsg/instance.hpp"

namespace tsg {

namespace detail {

inline std::string dist_params_text(const ValueDistribution& d) {
  std::string out = d.tag();
  std::visit(
      [&out](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Bernoulli> || std::is_same_v<T, Exponential>) {
          out += ' ' + format_double(x.mean);
        } else if constexpr (std::is_same_v<T, ParetoTypeI>) {
          out += ' ' + format_double(x.shape) + ' ' + format_double(x.scale);
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          out += ' ' + format_double(x.value);
        } else {
          out += ' ' + std::to_string(x.samples.size());
          for (double s : x.samples) out += ' ' + format_double(s);
        }
      },
      d.variant());
  return out;
}

inline ValueDistribution parse_dist_tokens(const std::vector<std::string_view>& tok, std::size_t at, long line) {
  auto need = [&](std::size_t n) {
    if (tok.size() != at + 1 + n) throw ParseError("wrong parameter count for '" + std::string(tok[at]) + "'", line);
  };
  const std::string_view tag = tok[at];
  try {
    if (tag == "bernoulli") {
      need(1);
      return ValueDistribution::bernoulli(parse_double(tok[at + 1], line));
    }
    if (tag == "exponential") {
      need(1);
      return ValueDistribution::exponential(parse_double(tok[at + 1], line));
    }
    if (tag == "pareto") {
      need(2);
      return ValueDistribution::pareto(parse_double(tok[at + 1], line), parse_double(tok[at + 2], line));
    }
    if (tag == "deterministic") {
      need(1);
      return ValueDistribution::deterministic(parse_double(tok[at + 1], line));
    }
    if (tag == "empirical") {
      if (tok.size() < at + 2) throw ParseError("empirical needs a sample count", line);
      const auto n = parse_int(tok[at + 1], line);
      if (n < 0 || tok.size() != at + 2 + static_cast<std::size_t>(n)) {
        throw ParseError("empirical sample count does not match", line);
      }
      std::vector<double> s;
      s.reserve(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) s.push_back(parse_double(tok[at + 2 + i], line));
      return ValueDistribution::empirical(std::move(s));
    }
  } catch (const InvalidParameterError& e) {
    throw ParseError(e.what(), line);
  }
  throw ParseError("unknown distribution tag '" + std::string(tag) + "'", line);
}

}  // namespace detail

inline void write_instance_text(std::ostream& os, const Instance& inst) {
  os << "tsg-instance 1\n";
  os << "budget " << format_double(inst.budget()) << '\n';
  os << "seed " << inst.seed() << '\n';
  for (const auto& it : inst.items()) {
    os << "item " << it.id << ' ' << format_double(it.cost) << ' ' << detail::dist_params_text(it.dist) << '\n';
  }
}

inline std::string instance_to_text(const Instance& inst) {
  std::ostringstream os;
  write_instance_text(os, inst);
  return os.str();
}

inline Instance read_instance_text(std::istream& is) {
  std::string raw;
  long line = 0;
  bool header = false;
  double budget = 0.0;
  bool have_budget = false;
  std::uint64_t seed = 0;
  std::vector<Item> items;
  while (std::getline(is, raw)) {
    ++line;
    std::string_view sv(raw);
    if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    auto tok = split_ws(sv);
    if (tok.empty()) continue;
    if (!header) {
      if (tok.size() != 2 || tok[0] != "tsg-instance" || tok[1] != "1") {
        throw ParseError("missing 'tsg-instance 1' header", line);
      }
      header = true;
      continue;
    }
    if (tok[0] == "budget" && tok.size() == 2) {
      budget = parse_double(tok[1], line);
      have_budget = true;
    } else if (tok[0] == "seed" && tok.size() == 2) {
      seed = parse_uint(tok[1], line);
    } else if (tok[0] == "item" && tok.size() >= 4) {
      Item it;
      it.id = parse_int(tok[1], line);
      it.cost = parse_double(tok[2], line);
      it.dist = detail::parse_dist_tokens(tok, 3, line);
      items.push_back(std::move(it));
    } else {
      throw ParseError("unrecognized record '" + std::string(tok[0]) + "'", line);
    }
  }
  if (!header) throw ParseError("empty instance file", 0);
  if (!have_budget) throw ParseError("instance has no budget record", 0);
  return Instance(std::move(items), budget, seed);
}

inline Instance instance_from_text(const std::string& text) {
  std::istringstream is(text);
  return read_instance_text(is);
}

inline nlohmann::json dist_to_json(const ValueDistribution& d) {
  nlohmann::json j;
  j["type"] = d.tag();
  std::visit(
      [&j](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Bernoulli> || std::is_same_v<T, Exponential>) {
          j["mean"] = x.mean;
        } else if constexpr (std::is_same_v<T, ParetoTypeI>) {
          j["shape"] = x.shape;
          j["scale"] = x.scale;
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          j["value"] = x.value;
        } else {
          j["samples"] = x.samples;
        }
      },
      d.variant());
  return j;
}

inline ValueDistribution dist_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "bernoulli") return ValueDistribution::bernoulli(j.at("mean").get<double>());
  if (type == "exponential") return ValueDistribution::exponential(j.at("mean").get<double>());
  if (type == "pareto") return ValueDistribution::pareto(j.at("shape").get<double>(), j.at("scale").get<double>());
  if (type == "deterministic") return ValueDistribution::deterministic(j.at("value").get<double>());
  if (type == "empirical") return ValueDistribution::empirical(j.at("samples").get<std::vector<double>>());
  throw ParseError("unknown distribution type '" + type + "'", 0);
}

inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json j;
  j["format"] = "tsg-instance";
  j["version"] = 1;
  j["budget"] = inst.budget();
  j["seed"] = inst.seed();
  auto& arr = j["items"] = nlohmann::json::array();
  for (const auto& it : inst.items()) {
    arr.push_back({{"id", it.id}, {"cost", it.cost}, {"dist", dist_to_json(it.dist)}});
  }
  return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
  try {
    std::vector<Item> items;
    for (const auto& e : j.at("items")) {
      items.push_back(Item{e.at("id").get<ItemId>(), e.at("cost").get<double>(), dist_from_json(e.at("dist"))});
    }
    return Instance(std::move(items), j.at("budget").get<double>(), j.value("seed", std::uint64_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed instance json: ") + e.what(), 0);
  }
}

/// Reads either format, sniffing the first non-blank character.
inline Instance read_instance(std::istream& is) {
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return instance_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), 0);
    }
  }
  return instance_from_text(text);
}

}  // namespace tsg
