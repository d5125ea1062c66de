#include "ema/session.hpp"

#include "ema/io.hpp"

#include <httplib.h>

#include <ctime>
#include <iomanip>
#include <sstream>

namespace ema::session {

std::string_view toString(Status s) {
    switch (s) {
        case Status::Running: return "Running";
        case Status::WaitingForAnswer: return "WaitingForAnswer";
        case Status::Finished: return "Finished";
        case Status::TimedOut: return "TimedOut";
        case Status::Failed: return "Failed";
    }
    return "?";
}

namespace {

std::string utcNow() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

nlohmann::json variableJson(const Variable& v) {
    nlohmann::json j{{"name", v.name}};
    j["values"] = v.values ? nlohmann::json(*v.values) : nlohmann::json(nullptr);
    j["description"] = v.description ? nlohmann::json(*v.description) : nlohmann::json(nullptr);
    return j;
}

}  // namespace

class Session {
public:
    std::string id;
    std::string description;
    std::vector<MixedGraph> models;
    std::optional<MixedGraph> truth;
    AveragingConfig cfg;
    std::chrono::milliseconds timeout{15 * 60 * 1000};

    mutable std::mutex mu;
    mutable std::condition_variable cv;
    Status status = Status::Running;
    std::uint64_t nextQueryId = 1;
    std::optional<std::pair<std::uint64_t, ExpertQuery>> pending;
    std::optional<ExpertAnswer> submitted;
    std::vector<AnsweredQuery> answered;
    std::optional<AveragingResult> result;
    std::optional<MetricsReport> metrics;
    std::string error;
    bool shutdown = false;
    std::thread worker;

    const VariableSet& vars() const { return models.front().variables(); }
    void run();
};

namespace {

class HumanExpert : public Expert {
public:
    explicit HumanExpert(Session& s) : s_(s) {}

    ExpertAnswer ask(const ExpertQuery& q) override {
        std::unique_lock lock(s_.mu);
        const auto queryId = s_.nextQueryId++;
        s_.pending = std::make_pair(queryId, q);
        s_.submitted.reset();
        s_.status = Status::WaitingForAnswer;
        s_.cv.notify_all();
        const bool answered = s_.cv.wait_for(lock, s_.timeout, [&] { return s_.submitted || s_.shutdown; });
        if (!answered || s_.shutdown) {
            s_.pending.reset();
            s_.status = Status::TimedOut;
            s_.cv.notify_all();
            throw ExpertTimeout("no answer to query " + std::to_string(queryId) + " within the timeout");
        }
        ExpertAnswer a = *s_.submitted;
        s_.answered.push_back(AnsweredQuery{queryId, q, a, utcNow()});
        s_.submitted.reset();
        s_.pending.reset();
        s_.status = Status::Running;
        s_.cv.notify_all();
        return a;
    }

    std::string id() const override { return "human"; }

private:
    Session& s_;
};

}  // namespace

void Session::run() {
    HumanExpert expert(*this);
    try {
        auto r = expertModelAverage(std::span<const MixedGraph>(models), cfg, expert);
        std::optional<MetricsReport> m;
        if (truth) {
            m = score(*truth, r.dag.toMixed());
            m->expertCalls = countExpertCalls(r.trace);
        }
        std::lock_guard lock(mu);
        result = std::move(r);
        metrics = std::move(m);
        status = Status::Finished;
    } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (status != Status::TimedOut) status = Status::Failed;
        error = e.what();
    }
    cv.notify_all();
}

// ---------------------------------------------------------------------------
// SessionManager

SessionManager::~SessionManager() {
    std::map<std::string, std::shared_ptr<Session>> all;
    {
        std::lock_guard lock(mu_);
        all = sessions_;
    }
    for (auto& [id, s] : all) {
        {
            std::lock_guard lock(s->mu);
            s->shutdown = true;
        }
        s->cv.notify_all();
        if (s->worker.joinable()) s->worker.join();
    }
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
    return it->second;
}

std::string SessionManager::create(const nlohmann::json& body) {
    auto s = std::make_shared<Session>();
    try {
        if (!body.is_object()) throw ArgumentError("session body must be a JSON object");
        if (body.contains("expert") && body["expert"] != "human")
            throw ArgumentError("sessions serve the human expert only");
        std::shared_ptr<const VariableSet> vars;
        if (body.contains("variables")) vars = io::loadVariables(body["variables"].get<std::string>());
        if (body.contains("models")) {
            for (const auto& doc : body["models"]) s->models.push_back(io::parseGraphJson(doc, "models"));
        } else if (body.contains("modelPaths")) {
            std::vector<std::filesystem::path> paths;
            for (const auto& p : body["modelPaths"]) paths.emplace_back(p.get<std::string>());
            s->models = io::loadModels(paths, vars);
        }
        checkModelSet(s->models);
        if (body.contains("truth"))
            s->truth = io::parseGraphJson(body["truth"], "truth");
        else if (body.contains("truthPath"))
            s->truth = io::parseGraphFile(body["truthPath"].get<std::string>(),
                                          vars ? vars : s->models.front().variablesPtr());
        if (s->truth && !s->truth->variables().sameNames(s->models.front().variables()))
            throw ArgumentError("truth and models are defined over different variables");
        s->cfg.theta1 = body.value("theta1", 0.0);
        s->cfg.theta2 = body.value("theta2", 0.7);
        s->cfg.seed = body.value("seed", std::uint64_t{0});
        const auto tie = body.value("tieBreak", std::string("lexicographic"));
        if (tie == "shuffle")
            s->cfg.tieBreak = TieBreak::SeededShuffle;
        else if (tie != "lexicographic")
            throw ArgumentError("tieBreak must be lexicographic or shuffle");
        s->cfg.validate();
        const double timeoutSeconds = body.value("timeoutSeconds", 15.0 * 60.0);
        if (!(timeoutSeconds > 0)) throw ArgumentError("timeoutSeconds must be positive");
        s->timeout = std::chrono::milliseconds(static_cast<long long>(timeoutSeconds * 1000));
        s->description = body.value("description", std::string());
    } catch (const ServiceError&) {
        throw;
    } catch (const std::exception& e) {
        throw ServiceError(400, e.what());
    }
    {
        std::lock_guard lock(mu_);
        s->id = "s" + std::to_string(nextId_++);
        sessions_[s->id] = s;
    }
    s->worker = std::thread([s] { s->run(); });
    return s->id;
}

nlohmann::json SessionManager::status(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    nlohmann::json j{{"sessionId", s->id},
                     {"description", s->description},
                     {"status", toString(s->status)},
                     {"answered", s->answered.size()}};
    if (!s->error.empty()) j["error"] = s->error;
    return j;
}

nlohmann::json SessionManager::pending(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    nlohmann::json j{{"sessionId", s->id}, {"status", toString(s->status)}};
    if (!s->pending || s->submitted) {
        j["query"] = nullptr;
        return j;
    }
    const auto& [queryId, q] = *s->pending;
    nlohmann::json query{{"queryId", queryId},
                         {"kind", toString(q.kind)},
                         {"x", variableJson(s->vars()[q.x])},
                         {"y", variableJson(s->vars()[q.y])}};
    if (q.context) {
        const auto& c = *q.context;
        query["c"] = c.connection;
        query["n"] = c.models;
        query["connectionShare"] = c.share();
        query["orientedShares"] = {
            {"xy", c.connection ? static_cast<double>(c.orientedXY) / c.connection : 0.0},
            {"yx", c.connection ? static_cast<double>(c.orientedYX) / c.connection : 0.0}};
    }
    nlohmann::json history = nlohmann::json::array();
    for (const auto& a : s->answered) {
        nlohmann::json h{{"queryId", a.queryId},
                         {"kind", toString(a.query.kind)},
                         {"pair", {a.query.xName, a.query.yName}}};
        if (a.answer.kind == QueryKind::Existence)
            h["accept"] = a.answer.accept;
        else
            h["orientation"] = {s->vars().name(a.answer.parent), s->vars().name(a.answer.child)};
        history.push_back(std::move(h));
    }
    query["history"] = std::move(history);
    j["query"] = std::move(query);
    return j;
}

nlohmann::json SessionManager::submit(const std::string& id, const nlohmann::json& body) {
    auto s = find(id);
    if (!body.is_object() || !body.contains("queryId") || !body["queryId"].is_number_unsigned())
        throw ServiceError(400, "answer needs a numeric queryId");
    const auto queryId = body["queryId"].get<std::uint64_t>();
    std::lock_guard lock(s->mu);
    if (!s->pending || s->pending->first != queryId || s->submitted)
        throw ServiceError(409, "query " + std::to_string(queryId) + " is not the pending query");
    const auto& q = s->pending->second;
    ExpertAnswer a;
    try {
        if (q.kind == QueryKind::Existence) {
            if (!body.contains("accept") || !body["accept"].is_boolean())
                throw ArgumentError("existence answers need a boolean \"accept\"");
            a = ExpertAnswer::existence(body["accept"].get<bool>(), Provenance::Human);
        } else {
            if (!body.contains("parent") || !body.contains("child"))
                throw ArgumentError("orientation answers need \"parent\" and \"child\"");
            const auto parent = body["parent"].get<std::string>();
            const auto child = body["child"].get<std::string>();
            if (!((parent == q.xName && child == q.yName) || (parent == q.yName && child == q.xName)))
                throw ArgumentError("orientation must name the queried pair ('" + q.xName + "', '" +
                                    q.yName + "')");
            a = ExpertAnswer::orientation(s->vars().at(parent), s->vars().at(child), Provenance::Human);
        }
    } catch (const std::exception& e) {
        throw ServiceError(400, e.what());
    }
    s->submitted = a;
    s->cv.notify_all();
    return {{"accepted", true}, {"queryId", queryId}};
}

nlohmann::json SessionManager::result(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    if (s->status != Status::Finished)
        throw ServiceError(409, "session " + id + " is " + std::string(toString(s->status)));
    nlohmann::json j;
    j["sessionId"] = s->id;
    j["dag"] = io::graphToJson(s->result->dag.toMixed());
    j["metrics"] = s->metrics ? io::metricsToJson(*s->metrics) : nlohmann::json(nullptr);
    j["trace"] = io::traceToJson(s->result->trace, s->vars());
    return j;
}

nlohmann::json SessionManager::trace(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    nlohmann::json j{{"sessionId", s->id}, {"status", toString(s->status)}};
    nlohmann::json answered = nlohmann::json::array();
    for (const auto& a : s->answered) {
        nlohmann::json h{{"queryId", a.queryId},
                         {"kind", toString(a.query.kind)},
                         {"pair", {a.query.xName, a.query.yName}},
                         {"timestamp", a.timestamp}};
        if (a.answer.kind == QueryKind::Existence)
            h["accept"] = a.answer.accept;
        else
            h["orientation"] = {s->vars().name(a.answer.parent), s->vars().name(a.answer.child)};
        answered.push_back(std::move(h));
    }
    j["answered"] = std::move(answered);
    if (s->result) j["trace"] = io::traceToJson(s->result->trace, s->vars());
    return j;
}

Status SessionManager::waitFinished(const std::string& id, std::chrono::milliseconds deadline) const {
    auto s = find(id);
    std::unique_lock lock(s->mu);
    s->cv.wait_for(lock, deadline, [&] {
        return s->status != Status::Running && s->status != Status::WaitingForAnswer;
    });
    return s->status;
}

bool SessionManager::waitPending(const std::string& id, std::chrono::milliseconds deadline) const {
    auto s = find(id);
    std::unique_lock lock(s->mu);
    return s->cv.wait_for(lock, deadline, [&] {
        return (s->pending && !s->submitted) ||
               (s->status != Status::Running && s->status != Status::WaitingForAnswer);
    });
}

// ---------------------------------------------------------------------------
// HTTP

SessionServer::SessionServer(SessionManager& manager)
    : manager_(manager), server_(std::make_unique<httplib::Server>()) {
    routes();
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::routes() {
    auto reply = [](httplib::Response& res, int status, const nlohmann::json& j) {
        res.status = status;
        res.set_content(j.dump(), "application/json");
    };
    auto guarded = [reply](auto handler) {
        return [handler, reply](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const ServiceError& e) {
                reply(res, e.status(), {{"error", e.what()}});
            } catch (const nlohmann::json::exception& e) {
                reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
            } catch (const std::exception& e) {
                reply(res, 500, {{"error", e.what()}});
            }
        };
    };
    auto& srv = *server_;
    srv.Get("/health", guarded([reply](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, {{"status", "ok"}});
    }));
    srv.Post("/sessions", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
        auto id = manager_.create(nlohmann::json::parse(req.body));
        reply(res, 201, {{"sessionId", id}});
    }));
    srv.Get(R"(/sessions/([^/]+))", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, manager_.status(req.matches[1]));
    }));
    srv.Get(R"(/sessions/([^/]+)/pending)", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, manager_.pending(req.matches[1]));
    }));
    srv.Post(R"(/sessions/([^/]+)/answer)", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, manager_.submit(req.matches[1], nlohmann::json::parse(req.body)));
    }));
    srv.Get(R"(/sessions/([^/]+)/result)", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, manager_.result(req.matches[1]));
    }));
    srv.Get(R"(/sessions/([^/]+)/trace)", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, manager_.trace(req.matches[1]));
    }));
}

int SessionServer::start(const std::string& host, int port) {
    int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

bool SessionServer::listen(const std::string& host, int port) {
    return server_->listen(host, port);
}

void SessionServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace ema::session
