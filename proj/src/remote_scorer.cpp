#include <ovmot/remote_scorer.hpp>

#include <ovmot/errors.hpp>

#include "httplib.h"

#include <algorithm>

namespace ovmot {

HttpTransport::HttpTransport(std::string base_url, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
    constexpr std::string_view scheme = "http://";
    if (base_url.rfind(scheme, 0) != 0) {
        throw ConfigError("scorer endpoint must be an http:// URL, got '" + base_url + "'");
    }
    const auto slash = base_url.find('/', scheme.size());
    host_ = base_url.substr(0, slash);
    if (slash != std::string::npos) {
        prefix_ = base_url.substr(slash);
        while (!prefix_.empty() && prefix_.back() == '/') {
            prefix_.pop_back();
        }
    }
    if (host_.size() == scheme.size()) {
        throw ConfigError("scorer endpoint has no host: '" + base_url + "'");
    }
}

namespace {

template <class Fn>
std::optional<HttpResponse> with_client(const std::string& host, std::chrono::milliseconds timeout,
                                        Fn&& fn) {
    httplib::Client cli(host);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    auto res = fn(cli);
    if (!res) {
        return std::nullopt;
    }
    return HttpResponse{res->status, res->body};
}

} // namespace

std::optional<HttpResponse> HttpTransport::post(const std::string& path, const std::string& body) {
    return with_client(host_, timeout_, [&](httplib::Client& cli) {
        return cli.Post(prefix_ + path, body, "application/json");
    });
}

std::optional<HttpResponse> HttpTransport::get(const std::string& path) {
    return with_client(host_, timeout_, [&](httplib::Client& cli) { return cli.Get(prefix_ + path); });
}

nlohmann::json make_score_request(const std::string& template_id,
                                  std::span<const ScoreRequest> requests) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& r : requests) {
        pairs.push_back({{"pair_id", r.pair_id}, {"prompt", to_json(r.prompt)}});
    }
    return {{"template_id", template_id}, {"pairs", std::move(pairs)}};
}

std::vector<AssociationScore> parse_score_response(const std::string& body,
                                                   std::span<const ScoreRequest> requests) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedResponse(std::string("score response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("scores") || !j.at("scores").is_array()) {
        throw MalformedResponse("score response lacks a 'scores' array");
    }
    const auto& scores = j.at("scores");
    if (scores.size() != requests.size()) {
        throw MalformedResponse("score response has " + std::to_string(scores.size()) +
                                " entries for " + std::to_string(requests.size()) + " pairs");
    }
    std::vector<AssociationScore> out;
    out.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& s = scores[i];
        const std::string where = "scores[" + std::to_string(i) + "]";
        if (!s.is_object()) {
            throw MalformedResponse(where + " is not an object");
        }
        if (!s.contains("pair_id") || !s.at("pair_id").is_string() ||
            s.at("pair_id").get<std::string>() != requests[i].pair_id) {
            throw MalformedResponse(where + ".pair_id does not echo request '" +
                                    requests[i].pair_id + "'");
        }
        if (!s.contains("p") || !s.at("p").is_number()) {
            throw MalformedResponse(where + ".p missing or not a number");
        }
        AssociationScore score{s.at("p").get<double>(), std::nullopt};
        if (s.contains("q") && !s.at("q").is_null()) {
            if (!s.at("q").is_number()) {
                throw MalformedResponse(where + ".q is neither null nor a number");
            }
            score.q = s.at("q").get<double>();
        }
        score.validate();
        out.push_back(score);
    }
    return out;
}

RemoteScorer::RemoteScorer(std::shared_ptr<ScoreTransport> transport, RemoteScorerConfig cfg)
    : transport_(std::move(transport)), cfg_(std::move(cfg)) {
    if (!transport_) {
        throw ConfigError("remote scorer needs a transport");
    }
    if (cfg_.max_batch == 0) {
        throw ConfigError("max_batch must be >= 1");
    }
    if (cfg_.retries < 0) {
        throw ConfigError("retries must be >= 0");
    }
}

HttpResponse RemoteScorer::call(const std::string& what,
                                const std::function<std::optional<HttpResponse>()>& fn) const {
    std::string last = "transport failure";
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
        auto res = fn();
        if (!res) {
            last = "transport failure";
            continue;
        }
        if (res->status >= 500) {
            last = "HTTP " + std::to_string(res->status);
            continue;
        }
        return *res;
    }
    throw ScorerUnavailable(what + " failed after " + std::to_string(cfg_.retries + 1) +
                            " attempt(s): " + last);
}

std::vector<AssociationScore> RemoteScorer::score_batch(std::span<const ScoreRequest> requests) const {
    if (requests.empty()) {
        return {};
    }
    require_unique_pair_ids(requests);
    std::vector<AssociationScore> out;
    out.reserve(requests.size());
    for (std::size_t start = 0; start < requests.size(); start += cfg_.max_batch) {
        const auto chunk = requests.subspan(start, std::min(cfg_.max_batch, requests.size() - start));
        const std::string body = make_score_request(cfg_.template_id, chunk).dump();
        const HttpResponse res =
            call("POST /v1/score", [&] { return transport_->post("/v1/score", body); });
        if (res.status != 200) {
            throw MalformedResponse("POST /v1/score returned HTTP " + std::to_string(res.status) +
                                    ": " + res.body);
        }
        auto scores = parse_score_response(res.body, chunk);
        out.insert(out.end(), scores.begin(), scores.end());
    }
    return out;
}

ServiceHealth RemoteScorer::health() const {
    const HttpResponse res = call("GET /v1/health", [&] { return transport_->get("/v1/health"); });
    if (res.status != 200) {
        throw MalformedResponse("GET /v1/health returned HTTP " + std::to_string(res.status));
    }
    try {
        const auto j = nlohmann::json::parse(res.body);
        ServiceHealth h{j.at("mode").get<std::string>(), j.at("version").get<std::string>()};
        if (h.mode != "parity" && h.mode != "lm") {
            throw MalformedResponse("health reports unknown mode '" + h.mode + "'");
        }
        return h;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedResponse(std::string("health response malformed: ") + e.what());
    }
}

FallbackScorer::FallbackScorer(std::shared_ptr<const Scorer> primary,
                               std::shared_ptr<const Scorer> fallback)
    : primary_(std::move(primary)), fallback_(std::move(fallback)) {
    if (!primary_ || !fallback_) {
        throw ConfigError("fallback scorer needs both scorers");
    }
}

std::vector<AssociationScore> FallbackScorer::score_batch(std::span<const ScoreRequest> requests) const {
    try {
        return primary_->score_batch(requests);
    } catch (const ScorerUnavailable&) {
        return fallback_->score_batch(requests);
    }
}

std::shared_ptr<const Scorer> make_scorer(const std::string& spec, const GeoScorerParams& geo,
                                          bool fallback_to_geometric, const std::string& template_id) {
    auto geometric = std::make_shared<const GeometricScorer>(geo);
    if (spec == "geometric") {
        return geometric;
    }
    constexpr std::string_view remote = "remote:";
    if (spec.rfind(remote, 0) == 0) {
        RemoteScorerConfig cfg;
        cfg.template_id = template_id;
        auto client = std::make_shared<const RemoteScorer>(
            std::make_shared<HttpTransport>(spec.substr(remote.size())), cfg);
        if (fallback_to_geometric) {
            return std::make_shared<const FallbackScorer>(client, geometric);
        }
        return client;
    }
    throw ConfigError("unknown scorer '" + spec + "' (expected geometric or remote:<url>)");
}

} // namespace ovmot
