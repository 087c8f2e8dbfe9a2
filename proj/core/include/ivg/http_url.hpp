#pragma once

#include <stdexcept>
#include <string>

namespace ivg {

// "http://host:port/some/path" -> origin "http://host:port", path "/some/path".
struct HttpUrl {
  std::string origin;
  std::string path;
};

inline HttpUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace ivg
