#include "smbo/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "smbo/errors.hpp"

namespace smbo::service {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::state_error: return "state_error";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::invalid_input: return 400;
    case ErrorCode::conflict: return 409;
    case ErrorCode::state_error: return 422;
    case ErrorCode::internal: return 500;
  }
  return 500;
}

json ApiError::to_json() const { return {{"code", to_string(code_)}, {"message", what()}, {"detail", detail_}}; }

json StudyRecord::to_json() const {
  return {{"id", id}, {"owner", owner}, {"created", created}, {"updated", updated}, {"study", study.to_json()}};
}

json StudyRecord::summary() const {
  const auto inc = study.incumbent();
  json s{{"id", id},
         {"owner", owner},
         {"created", created},
         {"updated", updated},
         {"state", smbo::to_string(study.state())},
         {"revision", study.revision()},
         {"observations", study.history().size()},
         {"pending", study.pending().size()},
         {"direction", smbo::to_string(study.config().direction)}};
  s["incumbent"] = inc ? json{{"x", study.space().point_to_json(inc->x)}, {"y", inc->y}} : json(nullptr);
  return s;
}

namespace {

bool valid_id(const std::string& id) {
  static const std::regex pattern("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(id, pattern);
}

StudyRecord record_from_json(const json& j, const Clock& clock) {
  return StudyRecord{j.at("id").get<std::string>(), j.value("owner", std::string()),
                     j.value("created", std::string()), j.value("updated", std::string()),
                     Study::from_json(j.at("study"), clock)};
}

}  // namespace

StudyStore::StudyStore(fs::path directory, Clock clock) : dir_(std::move(directory)), clock_(std::move(clock)) {
  fs::create_directories(dir_);
}

fs::path StudyStore::path_for(const std::string& id) const { return dir_ / (id + ".json"); }

bool StudyStore::exists(const std::string& id) const { return valid_id(id) && fs::exists(path_for(id)); }

std::mutex& StudyStore::lock_for(const std::string& id) {
  std::lock_guard<std::mutex> guard(locks_mutex_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::string StudyStore::new_id() {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  for (;;) {
    std::ostringstream os;
    os << "s" << std::hex << (gen() & 0xffffffffffffULL);
    if (!fs::exists(path_for(os.str()))) return os.str();
  }
}

void StudyStore::save(const StudyRecord& record) const {
  const auto target = path_for(record.id);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << record.to_json().dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, target);
}

StudyRecord StudyStore::create(Study study, const std::string& owner) {
  study.set_clock(clock_);
  std::lock_guard<std::mutex> guard(locks_mutex_);
  const auto now = clock_();
  StudyRecord record{new_id(), owner, now, now, std::move(study)};
  save(record);
  return record;
}

StudyRecord StudyStore::load(const std::string& id) const {
  if (!valid_id(id)) throw ApiError(ErrorCode::not_found, "no study '" + id + "'");
  std::ifstream in(path_for(id), std::ios::binary);
  if (!in) throw ApiError(ErrorCode::not_found, "no study '" + id + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ApiError(ErrorCode::internal, "stored study '" + id + "' is unreadable: " + e.what());
  }
  return record_from_json(j, clock_);
}

std::vector<StudyRecord> StudyStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  std::vector<StudyRecord> out;
  for (const auto& id : ids) {
    if (valid_id(id)) out.push_back(load(id));
  }
  return out;
}

json StudyStore::mutate(const std::string& id, std::optional<std::uint64_t> expected_revision,
                        const std::function<json(Study&)>& fn) {
  if (!valid_id(id)) throw ApiError(ErrorCode::not_found, "no study '" + id + "'");
  std::lock_guard<std::mutex> guard(lock_for(id));
  auto record = load(id);
  if (expected_revision && *expected_revision != record.study.revision()) {
    throw ApiError(ErrorCode::conflict, "study was modified concurrently",
                   {{"expected_revision", *expected_revision}, {"current_revision", record.study.revision()}});
  }
  const auto before = record.study.revision();
  json result = fn(record.study);
  if (record.study.revision() != before) {
    record.updated = clock_();
    save(record);
  }
  return result;
}

fs::path data_directory(const fs::path& fallback) {
  if (const char* env = std::getenv("SMBO_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return fallback;
}

// ---------------------------------------------------------------------------
// Routing

namespace {

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw ApiError(ErrorCode::invalid_input, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ApiError(ErrorCode::invalid_input, std::string("malformed JSON body: ") + e.what());
  }
}

std::optional<std::uint64_t> revision_of(const json& body) {
  if (!body.contains("revision") || body.at("revision").is_null()) return std::nullopt;
  if (!body.at("revision").is_number_unsigned()) {
    throw ApiError(ErrorCode::invalid_input, "revision must be a non-negative integer");
  }
  return body.at("revision").get<std::uint64_t>();
}

std::size_t count_param(const std::string& text, const char* name) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty() || text[0] == '-' || v == 0) {
    throw ApiError(ErrorCode::invalid_input, std::string(name) + " must be a positive integer");
  }
  return static_cast<std::size_t>(v);
}

std::size_t count_field(const json& body, const char* name, std::size_t fallback) {
  if (!body.contains(name)) return fallback;
  const auto& v = body.at(name);
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
    throw ApiError(ErrorCode::invalid_input, std::string(name) + " must be a positive integer");
  }
  return v.get<std::size_t>();
}

json points_json(const Study& s, const std::vector<DesignPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(s.space().point_to_json(p));
  return a;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

ApiError route_not_found(const Request& r) {
  return ApiError(ErrorCode::not_found, "no route for " + r.method + " " + r.path);
}

}  // namespace

Response Api::handle(const Request& request) {
  try {
    return dispatch(request);
  } catch (const ApiError& e) {
    return {http_status(e.code()), {{"error", e.to_json()}}};
  } catch (const ValidationError& e) {
    return {400, {{"error", ApiError(ErrorCode::invalid_input, e.what()).to_json()}}};
  } catch (const json::exception& e) {
    return {400, {{"error", ApiError(ErrorCode::invalid_input, e.what()).to_json()}}};
  } catch (const StateError& e) {
    return {422, {{"error", ApiError(ErrorCode::state_error, e.what()).to_json()}}};
  } catch (const std::exception& e) {
    return {500, {{"error", ApiError(ErrorCode::internal, e.what()).to_json()}}};
  }
}

Response Api::dispatch(const Request& r) {
  const auto parts = split_path(r.path);
  if (parts.empty() || parts[0] != "studies") throw route_not_found(r);

  if (parts.size() == 1) {
    if (r.method == "GET") {
      json list = json::array();
      for (const auto& rec : store_.list()) list.push_back(rec.summary());
      return {200, {{"studies", list}}};
    }
    if (r.method == "POST") {
      const json body = parse_body(r.body);
      if (!body.contains("space")) throw ApiError(ErrorCode::invalid_input, "body needs a 'space' document");
      const auto owner = body.value("owner", std::string());
      Study study(DesignSpace::parse(body.at("space")), StudyConfig::from_json(body.value("config", json::object())),
                  store_.clock());
      const auto rec = store_.create(std::move(study), owner);
      json out = rec.summary();
      out["study"] = rec.study.to_json();
      return {201, out};
    }
    throw route_not_found(r);
  }

  const std::string& id = parts[1];
  if (parts.size() == 2) {
    if (r.method != "GET") throw route_not_found(r);
    const auto rec = store_.load(id);
    json out = rec.summary();
    out["study"] = rec.study.to_json();
    return {200, out};
  }
  if (parts.size() != 3) throw route_not_found(r);
  const std::string& action = parts[2];

  if (r.method == "GET") {
    const auto rec = store_.load(id);
    const Study& s = rec.study;
    if (action == "history") {
      return {200, {{"history", s.to_json().at("history")}, {"revision", s.revision()}}};
    }
    if (action == "slate") {
      const auto it = r.query.find("k");
      const std::size_t k = it == r.query.end() ? 5 : count_param(it->second, "k");
      json slate = json::array();
      for (const auto& e : s.hitl_slate(k)) {
        slate.push_back({{"x", s.space().point_to_json(e.x)}, {"score", e.score}, {"mean", e.mean}, {"std", e.stddev}});
      }
      return {200, {{"slate", slate}, {"revision", s.revision()}, {"review_needed", s.hitl_review_needed()}}};
    }
    if (action == "best") {
      const auto it = r.query.find("mode");
      const auto mode = recommend_mode_from_string(it == r.query.end() ? "observed" : it->second);
      json out{{"mode", smbo::to_string(mode)}, {"x", s.space().point_to_json(s.recommend_best(mode))}};
      if (mode == RecommendMode::observed) out["y"] = s.incumbent()->y;
      return {200, out};
    }
    if (action == "curve") {
      json series = json::array();
      std::optional<double> best;
      for (const auto& o : s.history()) {
        if (!best || better(s.config().direction, o.y, *best)) best = o.y;
        series.push_back({{"iteration", o.iteration}, {"y", o.y}, {"best_so_far", *best}});
      }
      return {200, {{"direction", smbo::to_string(s.config().direction)}, {"series", series}}};
    }
    throw route_not_found(r);
  }

  if (r.method != "POST") throw route_not_found(r);
  const json body = parse_body(r.body);
  const auto revision = revision_of(body);

  if (action == "suggest") {
    const std::size_t q = count_field(body, "q", 0);
    return {200, store_.mutate(id, revision, [&](Study& s) {
              const auto pts = s.suggest(q);
              return json{{"suggestions", points_json(s, pts)}, {"revision", s.revision()}};
            })};
  }
  if (action == "observe") {
    if (!body.contains("x")) throw ApiError(ErrorCode::invalid_input, "observe needs 'x'");
    if (!body.contains("y") || !body.at("y").is_number()) {
      throw ApiError(ErrorCode::invalid_input, "observe needs a finite numeric 'y'");
    }
    std::optional<Source> source;
    if (body.contains("source") && !body.at("source").is_null()) {
      source = source_from_string(body.at("source").get<std::string>());
    }
    return {200, store_.mutate(id, revision, [&](Study& s) {
              const auto x = s.space().point_from_json(body.at("x"));
              const auto& obs = s.observe(x, body.at("y").get<double>(), source);
              const auto inc = s.incumbent();
              return json{{"observation", s.to_json().at("history").back()},
                          {"iteration", obs.iteration},
                          {"revision", s.revision()},
                          {"incumbent", {{"x", s.space().point_to_json(inc->x)}, {"y", inc->y}}}};
            })};
  }
  if (action == "stop") {
    return {200, store_.mutate(id, revision, [&](Study& s) {
              s.stop();
              return json{{"state", smbo::to_string(s.state())}, {"revision", s.revision()}};
            })};
  }
  if (action == "discard") {
    return {200, store_.mutate(id, revision, [&](Study& s) {
              s.discard_pending();
              return json{{"pending", s.pending().size()}, {"revision", s.revision()}};
            })};
  }
  throw route_not_found(r);
}

}  // namespace smbo::service
