#pragma once

// StackExchange data-dump ingestion: answers with up/down vote counts,
// Beta-posterior answer scores, per-expert profiles and experiment instances.
//
// Dumps store one `<row .../>` element per line, which lets the parser stream
// files of any size line by line.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tsg/errors.hpp"
#include "tsg/format.hpp"
#include "tsg/instance.hpp"
#include "tsg/rng.hpp"

namespace tsg::se {

/// Virtual up-votes (a0) and down-votes (b0) of the Beta prior.
struct BetaPrior {
  double a0 = 5.0;
  double b0 = 5.0;

  BetaPrior() = default;
  BetaPrior(double a, double b) : a0(a), b0(b) {
    if (!(a0 > 0.0) || !(b0 > 0.0)) throw InvalidParameterError("Beta prior parameters must be positive");
  }
};

/// The six priors of the published StackExchange study.
inline const std::vector<BetaPrior>& study_priors() {
  static const std::vector<BetaPrior> priors{{5, 5}, {2, 8}, {10, 10}, {4, 16}, {20, 20}, {8, 32}};
  return priors;
}

struct AnswerRecord {
  std::int64_t answer_id = 0;
  std::int64_t question_id = 0;
  std::int64_t owner_user_id = 0;
  std::int64_t upvotes = 0;
  std::int64_t downvotes = 0;
};

/// Posterior mean (u + a0) / (u + d + a0 + b0).
inline double answer_score(std::int64_t upvotes, std::int64_t downvotes, const BetaPrior& prior) {
  if (upvotes < 0 || downvotes < 0) throw InvalidParameterError("vote counts must be >= 0");
  const double u = static_cast<double>(upvotes);
  const double d = static_cast<double>(downvotes);
  return (u + prior.a0) / (u + d + prior.a0 + prior.b0);
}

// ---------------------------------------------------------------------------
// XML rows

using RowAttributes = std::vector<std::pair<std::string_view, std::string_view>>;

namespace detail {

inline bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
         c == ':' || c == '.';
}

/// Parses `<row a="..." b="..." />`; returns nullopt for structural lines
/// (XML declaration, opening/closing root tags, blank lines).
inline std::optional<RowAttributes> parse_row(std::string_view line, long lineno) {
  line = trim(line);
  if (line.empty()) return std::nullopt;
  if (line.front() != '<') throw ParseError("unexpected text outside an element", lineno);
  if (line.starts_with("<?") ) {
    if (!line.ends_with("?>")) throw ParseError("unterminated XML declaration", lineno);
    return std::nullopt;
  }
  if (!line.starts_with("<row")) {
    std::string_view body = line.substr(1);
    if (!body.empty() && body.front() == '/') body.remove_prefix(1);
    if (body.empty() || body.back() != '>') throw ParseError("malformed tag", lineno);
    body.remove_suffix(1);
    if (body.empty()) throw ParseError("empty tag", lineno);
    for (char c : body) {
      if (!is_name_char(c)) throw ParseError("malformed tag", lineno);
    }
    return std::nullopt;
  }
  if (line.size() < 6 || !line.ends_with("/>")) throw ParseError("row element is not self-closing", lineno);
  std::string_view body = line.substr(4, line.size() - 6);
  if (!body.empty() && body.front() != ' ' && body.front() != '\t') throw ParseError("malformed row tag", lineno);

  RowAttributes attrs;
  std::size_t i = 0;
  for (;;) {
    while (i < body.size() && (body[i] == ' ' || body[i] == '\t')) ++i;
    if (i >= body.size()) break;
    const std::size_t name_start = i;
    while (i < body.size() && is_name_char(body[i])) ++i;
    if (i == name_start) throw ParseError("malformed attribute name", lineno);
    const std::string_view name = body.substr(name_start, i - name_start);
    if (i >= body.size() || body[i] != '=') throw ParseError("attribute without '='", lineno);
    ++i;
    if (i >= body.size() || (body[i] != '"' && body[i] != '\'')) throw ParseError("unquoted attribute value", lineno);
    const char quote = body[i++];
    const std::size_t value_start = i;
    while (i < body.size() && body[i] != quote) ++i;
    if (i >= body.size()) throw ParseError("unterminated attribute value", lineno);
    attrs.emplace_back(name, body.substr(value_start, i - value_start));
    ++i;
  }
  return attrs;
}

inline std::optional<std::string_view> attr(const RowAttributes& attrs, std::string_view name) {
  for (const auto& [k, v] : attrs) {
    if (k == name) return v;
  }
  return std::nullopt;
}

}  // namespace detail

/// Streams Posts and Votes documents into one record per answer (PostTypeId
/// 2). Votes of type 2 count as up-votes, type 3 as down-votes; other types
/// are ignored. Answers without an OwnerUserId are dropped. Output is sorted
/// by answer id.
inline std::vector<AnswerRecord> parse_dump(std::istream& posts, std::istream& votes) {
  std::unordered_map<std::int64_t, AnswerRecord> answers;
  std::string line;
  long lineno = 0;
  while (std::getline(posts, line)) {
    ++lineno;
    auto row = detail::parse_row(line, lineno);
    if (!row) continue;
    const auto type = detail::attr(*row, "PostTypeId");
    if (!type || *type != "2") continue;
    const auto owner = detail::attr(*row, "OwnerUserId");
    if (!owner || owner->empty()) continue;
    const auto id = detail::attr(*row, "Id");
    const auto parent = detail::attr(*row, "ParentId");
    if (!id) throw ParseError("answer row without Id", lineno);
    AnswerRecord r;
    r.answer_id = parse_int(*id, lineno);
    r.question_id = parent ? parse_int(*parent, lineno) : 0;
    r.owner_user_id = parse_int(*owner, lineno);
    answers[r.answer_id] = r;
  }

  lineno = 0;
  while (std::getline(votes, line)) {
    ++lineno;
    auto row = detail::parse_row(line, lineno);
    if (!row) continue;
    const auto post = detail::attr(*row, "PostId");
    const auto type = detail::attr(*row, "VoteTypeId");
    if (!post || !type) continue;
    const bool up = *type == "2";
    const bool down = *type == "3";
    if (!up && !down) continue;
    auto it = answers.find(parse_int(*post, lineno));
    if (it == answers.end()) continue;
    if (up) ++it->second.upvotes;
    else ++it->second.downvotes;
  }

  std::vector<AnswerRecord> out;
  out.reserve(answers.size());
  for (auto& [id, r] : answers) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const AnswerRecord& a, const AnswerRecord& b) { return a.answer_id < b.answer_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Profiles and instances

struct ExpertProfile {
  std::int64_t user_id = 0;
  std::vector<double> answer_scores;  // ordered by answer id
  double mu_hat = 0.0;
};

struct ProfileOptions {
  BetaPrior prior;
  // Zero-vote answers score a0 / (a0 + b0); they are kept unless excluded.
  bool include_zero_vote = true;
};

/// Users with at least `min_answers` scored answers, ordered by user id.
inline std::vector<ExpertProfile> build_profiles(const std::vector<AnswerRecord>& records, std::size_t min_answers,
                                                 const ProfileOptions& opt = {}) {
  if (min_answers < 1) throw InvalidParameterError("min_answers must be >= 1");
  std::map<std::int64_t, std::vector<const AnswerRecord*>> by_user;
  for (const auto& r : records) {
    if (!opt.include_zero_vote && r.upvotes == 0 && r.downvotes == 0) continue;
    by_user[r.owner_user_id].push_back(&r);
  }
  std::vector<ExpertProfile> out;
  for (auto& [user, answers] : by_user) {
    if (answers.size() < min_answers) continue;
    std::sort(answers.begin(), answers.end(),
              [](const AnswerRecord* a, const AnswerRecord* b) { return a->answer_id < b->answer_id; });
    ExpertProfile p;
    p.user_id = user;
    double sum = 0.0;
    for (const auto* a : answers) {
      p.answer_scores.push_back(answer_score(a->upvotes, a->downvotes, opt.prior));
      sum += p.answer_scores.back();
    }
    p.mu_hat = sum / static_cast<double>(p.answer_scores.size());
    out.push_back(std::move(p));
  }
  return out;
}

struct TestSample {
  std::int64_t user_id;
  double score;
};

struct ExpertInstance {
  Instance instance;
  std::vector<TestSample> test_samples;
  std::vector<double> train_means;  // per item, instance order
};

struct SplitOptions {
  std::size_t train = 100;
  std::size_t holdout = 30;
  double budget_fraction = 0.3;
};

/// Per user, draws train + holdout scores without replacement (seeded by
/// user id), keeps the training part as the item's empirical distribution
/// and the rest as test samples. B = budget_fraction * sum of training means
/// and c_i = min(1 + lambda * mean_i, B).
inline ExpertInstance build_instance(const std::vector<ExpertProfile>& profiles, double lambda, std::uint64_t seed,
                                     const SplitOptions& opt = {}) {
  if (!(lambda >= 0.0)) throw InvalidParameterError("lambda must be >= 0");
  if (profiles.empty()) throw DomainError("no expert profiles");
  if (opt.train < 1) throw InvalidParameterError("training split must be nonempty");
  const std::size_t need = opt.train + opt.holdout;

  std::vector<std::vector<double>> train(profiles.size());
  std::vector<double> means(profiles.size());
  std::vector<TestSample> tests;
  double mean_total = 0.0;
  for (std::size_t u = 0; u < profiles.size(); ++u) {
    const auto& p = profiles[u];
    if (p.answer_scores.size() < need) {
      throw DomainError("user " + std::to_string(p.user_id) + " has " + std::to_string(p.answer_scores.size()) +
                        " answers; " + std::to_string(need) + " needed");
    }
    std::vector<std::size_t> idx(p.answer_scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    RandomStream rng(seed, static_cast<std::uint64_t>(p.user_id), Purpose::kSplit);
    for (std::size_t i = 0; i < need; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < opt.train; ++i) {
      train[u].push_back(p.answer_scores[idx[i]]);
      sum += train[u].back();
    }
    for (std::size_t i = opt.train; i < need; ++i) tests.push_back({p.user_id, p.answer_scores[idx[i]]});
    means[u] = sum / static_cast<double>(opt.train);
    mean_total += means[u];
  }

  const double budget = opt.budget_fraction * mean_total;
  std::vector<Item> items;
  items.reserve(profiles.size());
  for (std::size_t u = 0; u < profiles.size(); ++u) {
    const double cost = std::min(1.0 + lambda * means[u], budget);
    items.push_back({profiles[u].user_id, cost, ValueDistribution::empirical(std::move(train[u]))});
  }
  return ExpertInstance{Instance(std::move(items), budget, seed), std::move(tests), std::move(means)};
}

inline void write_profiles_csv(std::ostream& os, const std::vector<ExpertProfile>& profiles) {
  os << "user_id,n_answers,mu_hat\n";
  for (const auto& p : profiles) os << p.user_id << ',' << p.answer_scores.size() << ',' << format_double(p.mu_hat) << '\n';
}

inline void write_test_samples_csv(std::ostream& os, const std::vector<TestSample>& samples) {
  os << "user_id,score\n";
  for (const auto& s : samples) os << s.user_id << ',' << format_double(s.score) << '\n';
}

}  // namespace tsg::se
