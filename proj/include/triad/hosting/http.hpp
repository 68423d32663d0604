#pragma once

#include <algorithm>
#include <cctype>
#include <string>

// Eigen first: the resolver header pulled in by httplib defines _res.
#include "triad/hosting/service.hpp"

#include <httplib.h>

namespace triad::hosting {

inline Request from_httplib(const httplib::Request& r) {
  Request out;
  out.method = r.method;
  out.path = r.path;
  out.body = r.body;
  for (const auto& [k, v] : r.headers) {
    std::string name = k;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    out.headers.emplace(std::move(name), v);
  }
  for (const auto& [k, v] : r.params) out.query.emplace(k, v);
  return out;
}

// Routes every GET and POST through the service.
inline void bind(httplib::Server& server, const Service& service) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = service.handle(from_httplib(req));
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
}

}  // namespace triad::hosting
