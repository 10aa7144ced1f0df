#include "httplib.h"
#include "pedsim/errors.hpp"
#include "pedsim/oracle_gateway.hpp"

namespace pedsim {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    const auto scheme_end = request.url.find("://");
    if (scheme_end == std::string::npos) throw TransportError("endpoint URL has no scheme: " + request.url);
    const auto path_start = request.url.find('/', scheme_end + 3);
    const auto origin = request.url.substr(0, path_start);
    const auto path = path_start == std::string::npos ? std::string("/") : request.url.substr(path_start);

    httplib::Client client(origin);
    const auto seconds = static_cast<time_t>(request.timeout_s);
    const auto micros = static_cast<time_t>((request.timeout_s - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    auto result = client.Post(path, headers, request.body, content_type);
    if (!result) throw TransportError("request to " + origin + " failed: " + httplib::to_string(result.error()));
    return {result->status, result->body};
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace pedsim
