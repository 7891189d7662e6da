#include "liquid/tuning_service.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <set>
#include <sstream>

#include "liquid/dataset.hpp"
#include "liquid/divergence_fit.hpp"
#include "liquid/errors.hpp"
#include "liquid/model_io.hpp"
#include "liquid/smoothness_tuning.hpp"

#include "httplib.h"

namespace liquid {

namespace {

using Clock = std::chrono::steady_clock;

struct HttpError {
  int status;
  std::string code;
  std::string message;
  Json detail = Json::object();
};

ServiceResponse error_response(int status, const std::string& code, const std::string& message,
                               Json detail = Json::object()) {
  return {status, Json{{"code", code}, {"message", message}, {"detail", std::move(detail)}}};
}

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    Json j = Json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "request body must be a JSON object");
    return j;
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("request body is not valid JSON: ") + e.what());
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : path) {
    if (ch == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

}  // namespace

struct Session {
  std::string id;
  std::mutex mutex;
  Clock::time_point last_access = Clock::now();

  std::optional<FitData> data;
  std::size_t dev_rows = 0, val_rows = 0;
  Lambda2Map lambda2;
  std::map<std::string, Pattern> patterns;
  std::vector<std::string> locked;
  std::vector<Contribution> ordering;
  double baseline_dev = 0.0, baseline_val = 0.0;
  Json last = nullptr;
  std::map<std::string, Json> cache;

  bool is_locked(const std::string& name) const {
    return std::find(locked.begin(), locked.end(), name) != locked.end();
  }

  Json next_suggestion() const {
    for (const auto& c : ordering) {
      if (data->spec().at(c.name).has_liquid() && !is_locked(c.name)) return c.name;
    }
    return nullptr;
  }
};

struct TuningService::Impl {
  explicit Impl(ServiceOptions o) : options(o), fit_slots(std::max(1, o.fit_slots)) {}

  ServiceOptions options;
  mutable std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::counting_semaphore<1024> fit_slots;
  std::mt19937_64 id_rng{std::random_device{}()};
  std::mutex server_mutex;
  httplib::Server* server = nullptr;

  void purge_expired() {
    const auto now = Clock::now();
    std::lock_guard lock(sessions_mutex);
    for (auto it = sessions.begin(); it != sessions.end();) {
      if (now - it->second->last_access > options.ttl) {
        it = sessions.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::shared_ptr<Session> find(const std::string& id) {
    purge_expired();
    std::lock_guard lock(sessions_mutex);
    const auto it = sessions.find(id);
    if (it == sessions.end()) throw HttpError{404, "NOT_FOUND", "unknown session '" + id + "'"};
    return it->second;
  }

  FittedModel run_fit(const FitData& data, const Lambda2Map& lambda2, const std::vector<int>& warm) {
    fit_slots.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{fit_slots};
    FitOptions opt;
    opt.lambda2 = lambda2;
    opt.warm_start = warm;
    return fit(data, opt);
  }

  Json fit_body(Session& s) {
    Json pattern_json = Json::object();
    for (const auto& [name, p] : s.patterns) pattern_json[name] = std::string(pattern_name(p));
    const std::string key = Json{{"lambda2", s.lambda2}, {"patterns", pattern_json}}.dump();
    if (const auto it = s.cache.find(key); it != s.cache.end()) {
      Json body = it->second;
      body["cache_hit"] = true;
      return body;
    }
    const FitData data = s.data->with_patterns(s.patterns);
    const FittedModel fitted = woe_rescale(run_fit(data, s.lambda2, {}));
    Json body;
    body["dev_divergence"] = fitted.dev_divergence;
    body["val_divergence"] = fitted.val_divergence;
    body["lambda2"] = s.lambda2;
    body["patterns"] = pattern_json;
    body["curves"] = Json::array();
    body["discrete"] = Json::array();
    for (std::size_t k = 0; k < fitted.spec.characteristics.size(); ++k) {
      const auto& c = fitted.spec.characteristics[k];
      if (c.has_liquid()) body["curves"].push_back(curve_to_json(sample_curve(fitted, c.name, options.curve_points)));
      Json attrs = Json::array();
      std::size_t slot = fitted.spec.offset_of(k);
      for (const auto& p : c.leading) attrs.push_back({{"label", p.label}, {"score", fitted.beta(static_cast<Eigen::Index>(slot++))}});
      slot += c.liquid_count();
      for (const auto& p : c.trailing) attrs.push_back({{"label", p.label}, {"score", fitted.beta(static_cast<Eigen::Index>(slot++))}});
      if (!attrs.empty()) body["discrete"].push_back({{"name", c.name}, {"attributes", std::move(attrs)}});
    }
    s.cache[key] = body;
    body["cache_hit"] = false;
    return body;
  }

  Json state_body(const Session& s) const {
    Json j;
    j["session_id"] = s.id;
    j["rows"] = {{"dev", s.dev_rows}, {"val", s.val_rows}};
    j["lambda2"] = s.lambda2;
    Json pattern_json = Json::object();
    for (const auto& [name, p] : s.patterns) pattern_json[name] = std::string(pattern_name(p));
    j["patterns"] = pattern_json;
    j["locked"] = s.locked;
    j["ordering"] = Json::array();
    for (const auto& c : s.ordering) j["ordering"].push_back({{"name", c.name}, {"contribution", c.contribution}});
    j["next"] = s.next_suggestion();
    j["baseline"] = {{"dev_divergence", s.baseline_dev}, {"val_divergence", s.baseline_val}};
    j["last"] = s.last;
    j["grid"] = default_lambda2_grid();
    return j;
  }

  ServiceResponse create_session(const Json& req) {
    const auto spec_it = req.find("spec");
    if (spec_it == req.end()) throw Error(ErrorCode::ConfigError, "missing field 'spec'");
    RunConfig cfg = run_config_from_json(*spec_it);
    if (const auto sp = req.find("split"); sp != req.end()) {
      Json merged = *spec_it;
      merged["split"] = *sp;
      cfg = run_config_from_json(merged);
    }
    Dataset full;
    if (const auto csv = req.find("data_csv"); csv != req.end() && csv->is_string()) {
      full = parse_csv(csv->get<std::string>());
    } else if (const auto path = req.find("data_path"); path != req.end() && path->is_string()) {
      full = read_csv(path->get<std::string>());
    } else {
      throw Error(ErrorCode::ConfigError, "request needs 'data_csv' or 'data_path'");
    }
    if (full.rows() > options.max_rows) {
      throw Error(ErrorCode::InvalidArgument, "dataset has " + std::to_string(full.rows()) +
                                                  " rows; the limit is " + std::to_string(options.max_rows));
    }
    bind_columns(cfg.spec, full);
    const DataSplit split = split_dataset(full, cfg.val_fraction, cfg.seed);

    auto s = std::make_shared<Session>();
    s->data.emplace(cfg.spec, split.dev, &split.val);
    if (!s->data->val()) throw Error(ErrorCode::InvalidArgument, "validation split is empty");
    s->dev_rows = split.dev.rows();
    s->val_rows = split.val.rows();
    for (const auto& c : cfg.spec.characteristics) {
      s->lambda2[c.name] = 0.0;
      if (c.has_liquid()) s->patterns[c.name] = c.pattern;
    }
    const FittedModel baseline = run_fit(*s->data, s->lambda2, {});
    s->baseline_dev = baseline.dev_divergence;
    s->baseline_val = baseline.val_divergence;
    s->ordering = marginal_contributions(*s->data, s->lambda2);

    {
      std::lock_guard lock(sessions_mutex);
      std::ostringstream id;
      id << std::hex << id_rng();
      s->id = id.str();
      sessions[s->id] = s;
    }
    Json body;
    body["session_id"] = s->id;
    body["baseline"] = {{"dev_divergence", s->baseline_dev}, {"val_divergence", s->baseline_val}};
    body["ordering"] = state_body(*s)["ordering"];
    body["next"] = s->next_suggestion();
    return {201, body};
  }

  ServiceResponse refit(Session& s, const Json& req) {
    Lambda2Map lambda2 = s.lambda2;
    auto patterns = s.patterns;
    const ModelSpec& spec = s.data->spec();
    auto check_name = [&](const std::string& name) {
      if (std::none_of(spec.characteristics.begin(), spec.characteristics.end(),
                       [&](const auto& c) { return c.name == name; })) {
        throw HttpError{404, "NOT_FOUND", "unknown characteristic '" + name + "'", {{"subject", name}}};
      }
      if (s.is_locked(name)) {
        throw HttpError{409, "LOCKED", "characteristic '" + name + "' is locked", {{"subject", name}}};
      }
    };
    if (const auto it = req.find("lambda2"); it != req.end()) {
      if (!it->is_object()) throw Error(ErrorCode::ConfigError, "'lambda2' must be an object");
      for (const auto& [name, v] : it->items()) {
        check_name(name);
        if (!v.is_number() || !(v.get<double>() >= 0.0) || !std::isfinite(v.get<double>())) {
          throw Error(ErrorCode::ConfigError, "lambda2 for '" + name + "' must be a finite number >= 0", name);
        }
        lambda2[name] = v.get<double>();
      }
    }
    if (const auto it = req.find("patterns"); it != req.end()) {
      if (!it->is_object()) throw Error(ErrorCode::ConfigError, "'patterns' must be an object");
      for (const auto& [name, v] : it->items()) {
        check_name(name);
        if (!spec.at(name).has_liquid()) {
          throw Error(ErrorCode::ConfigError, "characteristic '" + name + "' has no liquid range", name);
        }
        if (!v.is_string()) throw Error(ErrorCode::ConfigError, "pattern for '" + name + "' must be a string", name);
        patterns[name] = parse_pattern(v.get<std::string>());
      }
    }
    std::swap(s.lambda2, lambda2);
    std::swap(s.patterns, patterns);
    try {
      Json body = fit_body(s);
      s.last = {{"dev_divergence", body["dev_divergence"]}, {"val_divergence", body["val_divergence"]}};
      return {200, body};
    } catch (...) {
      std::swap(s.lambda2, lambda2);
      std::swap(s.patterns, patterns);
      throw;
    }
  }

  ServiceResponse lock(Session& s, const Json& req) {
    const auto it = req.find("characteristic");
    if (it == req.end() || !it->is_string()) throw Error(ErrorCode::ConfigError, "missing field 'characteristic'");
    const std::string name = it->get<std::string>();
    const ModelSpec& spec = s.data->spec();
    if (std::none_of(spec.characteristics.begin(), spec.characteristics.end(),
                     [&](const auto& c) { return c.name == name; })) {
      throw HttpError{404, "NOT_FOUND", "unknown characteristic '" + name + "'", {{"subject", name}}};
    }
    if (!spec.at(name).has_liquid()) {
      throw Error(ErrorCode::InvalidArgument, "characteristic '" + name + "' has no liquid range", name);
    }
    if (s.is_locked(name)) {
      throw HttpError{409, "LOCKED", "characteristic '" + name + "' is already locked", {{"subject", name}}};
    }
    double value = s.lambda2.at(name);
    if (const auto v = req.find("lambda2"); v != req.end()) {
      if (!v->is_number() || !(v->get<double>() >= 0.0) || !std::isfinite(v->get<double>())) {
        throw Error(ErrorCode::ConfigError, "lambda2 must be a finite number >= 0", name);
      }
      value = v->get<double>();
    }
    const double previous = s.lambda2[name];
    s.lambda2[name] = value;
    Json fitted;
    try {
      fitted = fit_body(s);
    } catch (...) {
      s.lambda2[name] = previous;
      throw;
    }
    s.locked.push_back(name);
    s.last = {{"dev_divergence", fitted["dev_divergence"]}, {"val_divergence", fitted["val_divergence"]}};
    Json body;
    body["locked"] = s.locked;
    body["lambda2"] = s.lambda2;
    body["next"] = s.next_suggestion();
    body["fit"] = s.last;
    body["final"] = nullptr;
    if (body["next"].is_null()) {
      body["final"] = {{"val_divergence", fitted["val_divergence"]},
                       {"dev_divergence", fitted["dev_divergence"]},
                       {"lambda2", s.lambda2},
                       {"baseline_val_divergence", s.baseline_val}};
    }
    return {200, body};
  }

  ServiceResponse dispatch(const std::string& method, const std::string& path, const std::string& body) {
    const auto parts = split_path(path);
    if (parts.size() == 1 && parts[0] == "healthz") {
      if (method != "GET") return error_response(405, "METHOD_NOT_ALLOWED", "use GET");
      std::lock_guard lock(sessions_mutex);
      return {200, Json{{"status", "ok"}, {"sessions", sessions.size()}}};
    }
    if (parts.empty() || parts[0] != "sessions" || parts.size() > 3) {
      return error_response(404, "NOT_FOUND", "no route for '" + path + "'");
    }
    if (parts.size() == 1) {
      if (method != "POST") return error_response(405, "METHOD_NOT_ALLOWED", "use POST");
      purge_expired();
      return create_session(parse_body(body));
    }
    auto session = find(parts[1]);
    std::lock_guard guard(session->mutex);
    session->last_access = Clock::now();
    const std::string action = parts.size() == 3 ? parts[2] : "state";
    if (action == "state") {
      if (method != "GET") return error_response(405, "METHOD_NOT_ALLOWED", "use GET");
      return {200, state_body(*session)};
    }
    if (action == "refit" || action == "lock") {
      if (method != "POST") return error_response(405, "METHOD_NOT_ALLOWED", "use POST");
      const Json req = parse_body(body);
      return action == "refit" ? refit(*session, req) : lock(*session, req);
    }
    return error_response(404, "NOT_FOUND", "no route for '" + path + "'");
  }
};

TuningService::TuningService(ServiceOptions options) : impl_(std::make_unique<Impl>(options)) {}

TuningService::~TuningService() { stop(); }

ServiceResponse TuningService::handle(const std::string& method, const std::string& path, const std::string& body) {
  try {
    return impl_->dispatch(method, path, body);
  } catch (const HttpError& e) {
    return error_response(e.status, e.code, e.message, e.detail);
  } catch (const Error& e) {
    return {is_numerical(e.code()) ? 422 : 400, error_to_json(e)};
  } catch (const Json::exception& e) {
    return error_response(400, "CONFIG_ERROR", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "INTERNAL", e.what());
  }
}

void TuningService::serve(const std::string& host, int port, const std::function<void(int)>& on_bound) {
  httplib::Server server;
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const ServiceResponse r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(".*", forward);
  server.Post(".*", forward);
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
  {
    std::lock_guard lock(impl_->server_mutex);
    impl_->server = &server;
  }
  if (on_bound) on_bound(bound);
  server.listen_after_bind();
  std::lock_guard lock(impl_->server_mutex);
  impl_->server = nullptr;
}

void TuningService::stop() {
  std::lock_guard lock(impl_->server_mutex);
  if (impl_->server != nullptr) {
    impl_->server->wait_until_ready();
    impl_->server->stop();
  }
}

std::size_t TuningService::session_count() const {
  std::lock_guard lock(impl_->sessions_mutex);
  return impl_->sessions.size();
}

}  // namespace liquid
