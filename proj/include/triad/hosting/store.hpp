#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triad/domain/case_io.hpp"
#include "triad/pipeline/bundle.hpp"
#include "triad/survey/summary.hpp"

namespace triad::hosting {

using json = nlohmann::json;
using pipeline::DecisionBundle;
using pipeline::Setting;

struct CaseRecord {
  PatientCase patient;
  DecisionBundle bundle;
  std::uint64_t seq = 0;
};

struct ScoreRecord {
  std::string case_id;
  std::string reviewer_id;
  Setting setting = Setting::C;
  int agree = 3;
  int understand = 3;
  int use = 3;
  std::string submitted_at;
  std::uint64_t seq = 0;
  bool operator==(const ScoreRecord&) const = default;
};

// Everything the store knows; a pure fold over the log.
struct StoreState {
  std::uint64_t last_seq = 0;
  std::map<std::string, CaseRecord> cases;
  std::vector<std::string> case_order;
  std::vector<ScoreRecord> scores;
  std::vector<survey::QuestionnaireResponse> questionnaire;

  const CaseRecord* find_case(std::string_view id) const {
    auto it = cases.find(std::string(id));
    return it == cases.end() ? nullptr : &it->second;
  }

  bool has_score(std::string_view case_id, std::string_view reviewer_id) const {
    for (const auto& s : scores)
      if (s.case_id == case_id && s.reviewer_id == reviewer_id) return true;
    return false;
  }
};

// ---- log records ----

inline json case_entry(const PatientCase& c, const DecisionBundle& b) {
  return {{"type", "case"}, {"case", to_json(c)}, {"bundle", pipeline::to_json(b)}};
}

inline json score_entry(const ScoreRecord& s) {
  return {{"type", "score"},
          {"case_id", s.case_id},
          {"reviewer_id", s.reviewer_id},
          {"setting", std::string(pipeline::to_string(s.setting))},
          {"agree", s.agree},
          {"understand", s.understand},
          {"use", s.use},
          {"submitted_at", s.submitted_at}};
}

inline json questionnaire_entry(const survey::QuestionnaireResponse& q) {
  return {{"type", "questionnaire"},
          {"respondent_id", q.respondent_id},
          {"criterion", q.criterion},
          {"item", q.item},
          {"value", q.value}};
}

namespace detail {

inline int likert(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 5)
    throw InvalidField(key, "expected an integer in 1..5");
  return v.get<int>();
}

}  // namespace detail

inline ScoreRecord score_from_entry(const json& e) {
  ScoreRecord s;
  s.case_id = e.at("case_id").get<std::string>();
  s.reviewer_id = e.at("reviewer_id").get<std::string>();
  s.setting = pipeline::parse_setting(e.at("setting").get<std::string>());
  s.agree = detail::likert(e, "agree");
  s.understand = detail::likert(e, "understand");
  s.use = detail::likert(e, "use");
  s.submitted_at = e.value("submitted_at", "");
  return s;
}

// Folds one record into the state. Sequence numbers must increase.
inline void apply_record(StoreState& st, const json& e) {
  try {
    const auto seq = e.at("seq").get<std::uint64_t>();
    if (seq <= st.last_seq)
      throw FormatError("sequence " + std::to_string(seq) + " after " + std::to_string(st.last_seq));
    const auto type = e.at("type").get<std::string>();
    if (type == "case") {
      CaseRecord r{case_from_json(e.at("case")), pipeline::bundle_from_json(e.at("bundle")), seq};
      const auto id = r.patient.case_id;
      if (st.cases.count(id)) throw FormatError("case '" + id + "' recorded twice");
      st.cases.emplace(id, std::move(r));
      st.case_order.push_back(id);
    } else if (type == "score") {
      auto s = score_from_entry(e);
      s.seq = seq;
      if (!st.find_case(s.case_id)) throw FormatError("score for unknown case '" + s.case_id + "'");
      if (st.has_score(s.case_id, s.reviewer_id))
        throw FormatError("second score for (" + s.case_id + ", " + s.reviewer_id + ")");
      st.scores.push_back(std::move(s));
    } else if (type == "questionnaire") {
      st.questionnaire.push_back({e.at("respondent_id").get<std::string>(), e.at("criterion").get<std::string>(),
                                  e.at("item").get<std::string>(), detail::likert(e, "value")});
    } else {
      throw FormatError("unknown record type '" + type + "'");
    }
    st.last_seq = seq;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("store record: ") + ex.what());
  } catch (const InvalidField& ex) {
    throw FormatError(std::string("store record: ") + ex.what());
  } catch (const DomainError& ex) {
    throw FormatError(std::string("store record: ") + ex.what());
  }
}

inline StoreState replay(const std::vector<json>& log) {
  StoreState st;
  for (const auto& e : log) apply_record(st, e);
  return st;
}

// Canonical document of a state, used to compare replays.
inline json to_json(const StoreState& st) {
  json cases = json::array();
  for (const auto& id : st.case_order) {
    const auto& r = st.cases.at(id);
    cases.push_back({{"seq", r.seq}, {"case", to_json(r.patient)}, {"bundle", pipeline::to_json(r.bundle)}});
  }
  json scores = json::array();
  for (const auto& s : st.scores) {
    auto e = score_entry(s);
    e["seq"] = s.seq;
    scores.push_back(std::move(e));
  }
  json q = json::array();
  for (const auto& r : st.questionnaire) q.push_back(questionnaire_entry(r));
  return {{"last_seq", st.last_seq}, {"cases", cases}, {"scores", scores}, {"questionnaire", q}};
}

inline std::vector<json> read_log(const std::filesystem::path& file) {
  std::vector<json> out;
  std::ifstream in(file);
  if (!in) return out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(n, e.what());
    }
  }
  return out;
}

// Append-only log with an in-memory fold. Appends are serialized; readers
// take the current snapshot and never wait on a write in progress.
class Store {
 public:
  static constexpr const char* kLogName = "store.jsonl";

  // In-memory only.
  Store() : state_(std::make_shared<const StoreState>()) {}

  // Opens (or creates) `dir/store.jsonl` and replays it.
  explicit Store(const std::filesystem::path& dir) : dir_(dir) {
    std::filesystem::create_directories(dir);
    log_ = read_log(dir / kLogName);
    state_ = std::make_shared<const StoreState>(replay(log_));
    out_.open(dir / kLogName, std::ios::app);
    if (!out_) throw ConfigError("cannot open " + (dir / kLogName).string() + " for append");
  }

  std::shared_ptr<const StoreState> snapshot() const {
    std::lock_guard lock(snap_mu_);
    return state_;
  }

  std::vector<json> log() const {
    std::lock_guard lock(write_mu_);
    return log_;
  }

  // DuplicateId when the case, or the (case, reviewer) pair, exists.
  std::uint64_t add_case(const PatientCase& c, const DecisionBundle& b) {
    return append([&](const StoreState& st) {
      if (st.find_case(c.case_id)) throw DuplicateId("case '" + c.case_id + "' already exists");
      return case_entry(c, b);
    });
  }

  std::uint64_t add_score(const ScoreRecord& s) {
    return append([&](const StoreState& st) {
      if (!st.find_case(s.case_id)) throw DataError("unknown case '" + s.case_id + "'");
      if (st.has_score(s.case_id, s.reviewer_id))
        throw DuplicateId("case '" + s.case_id + "' already scored by '" + s.reviewer_id + "'");
      return score_entry(s);
    });
  }

  std::uint64_t add_questionnaire(const std::vector<survey::QuestionnaireResponse>& rs) {
    std::lock_guard lock(write_mu_);
    auto next = std::make_shared<StoreState>(*snapshot());
    std::vector<json> entries;
    for (const auto& r : rs) {
      auto e = questionnaire_entry(r);
      e["seq"] = next->last_seq + 1;
      apply_record(*next, e);
      entries.push_back(std::move(e));
    }
    commit(std::move(next), std::move(entries));
    return snapshot()->last_seq;
  }

 private:
  template <class MakeEntry>
  std::uint64_t append(MakeEntry make) {
    std::lock_guard lock(write_mu_);
    auto next = std::make_shared<StoreState>(*snapshot());
    json e = make(*next);
    e["seq"] = next->last_seq + 1;
    apply_record(*next, e);
    const auto seq = next->last_seq;
    std::vector<json> entries;
    entries.push_back(std::move(e));
    commit(std::move(next), std::move(entries));
    return seq;
  }

  // Caller holds write_mu_.
  void commit(std::shared_ptr<StoreState> next, std::vector<json> entries) {
    if (out_.is_open()) {
      for (const auto& e : entries) out_ << e.dump() << '\n';
      out_.flush();
      if (!out_) throw ConfigError("write to " + (dir_ / kLogName).string() + " failed");
    }
    for (auto& e : entries) log_.push_back(std::move(e));
    std::lock_guard lock(snap_mu_);
    state_ = std::move(next);
  }

  std::filesystem::path dir_;
  std::ofstream out_;
  std::vector<json> log_;
  mutable std::mutex write_mu_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const StoreState> state_;
};

}  // namespace triad::hosting
