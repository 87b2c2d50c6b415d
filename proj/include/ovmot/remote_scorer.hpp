#pragma once

#include <ovmot/scoring.hpp>

#include "json.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace ovmot {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Minimal request/response channel to the scoring service. A disengaged
/// optional means the transport itself failed (connect, timeout, reset).
class ScoreTransport {
public:
    virtual ~ScoreTransport() = default;
    virtual std::optional<HttpResponse> post(const std::string& path, const std::string& body) = 0;
    virtual std::optional<HttpResponse> get(const std::string& path) = 0;
};

/// cpp-httplib backed transport; a fresh client per call keeps it
/// shareable across threads.
class HttpTransport final : public ScoreTransport {
public:
    /// `base_url` is "http://host:port" with an optional path prefix.
    explicit HttpTransport(std::string base_url,
                           std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

    std::optional<HttpResponse> post(const std::string& path, const std::string& body) override;
    std::optional<HttpResponse> get(const std::string& path) override;

    const std::string& host() const { return host_; }
    const std::string& prefix() const { return prefix_; }

private:
    std::string host_;
    std::string prefix_;
    std::chrono::milliseconds timeout_;
};

struct RemoteScorerConfig {
    std::string template_id{kDefaultTemplateId};
    std::size_t max_batch = 256;
    int retries = 1;
};

struct ServiceHealth {
    std::string mode;
    std::string version;
};

/// POST /v1/score body for one chunk of requests.
nlohmann::json make_score_request(const std::string& template_id,
                                  std::span<const ScoreRequest> requests);

/// Parses and validates a /v1/score response against the request chunk.
/// Throws MalformedResponse on bad JSON, wrong count, mismatched pair ids
/// or out-of-range values.
std::vector<AssociationScore> parse_score_response(const std::string& body,
                                                   std::span<const ScoreRequest> requests);

/// Client for the scoring service. Splits batches at max_batch, retries a
/// failed transport call `retries` times and then raises ScorerUnavailable.
class RemoteScorer final : public Scorer {
public:
    RemoteScorer(std::shared_ptr<ScoreTransport> transport, RemoteScorerConfig cfg = {});

    std::vector<AssociationScore> score_batch(std::span<const ScoreRequest> requests) const override;
    std::string name() const override { return "remote"; }

    ServiceHealth health() const;

private:
    HttpResponse call(const std::string& what, const std::function<std::optional<HttpResponse>()>& fn) const;

    std::shared_ptr<ScoreTransport> transport_;
    RemoteScorerConfig cfg_;
};

/// Delegates to `primary`; on ScorerUnavailable scores the batch with
/// `fallback` instead.
class FallbackScorer final : public Scorer {
public:
    FallbackScorer(std::shared_ptr<const Scorer> primary, std::shared_ptr<const Scorer> fallback);

    std::vector<AssociationScore> score_batch(std::span<const ScoreRequest> requests) const override;
    std::string name() const override { return primary_->name() + "+fallback"; }

private:
    std::shared_ptr<const Scorer> primary_;
    std::shared_ptr<const Scorer> fallback_;
};

/// "geometric" or "remote:<url>".
std::shared_ptr<const Scorer> make_scorer(const std::string& spec, const GeoScorerParams& geo,
                                          bool fallback_to_geometric,
                                          const std::string& template_id = std::string(kDefaultTemplateId));

} // namespace ovmot
