#include "archgraph/url.hpp"

#include <cctype>

namespace archgraph::url {

std::string Reference::str() const {
  std::string out;
  if (scheme) out.append(*scheme).push_back(':');
  if (authority) out.append("//").append(*authority);
  out.append(path);
  if (query) out.append("?").append(*query);
  if (fragment) out.append("#").append(*fragment);
  return out;
}

Reference parse(std::string_view ref) {
  Reference out;
  // scheme = ALPHA *( ALPHA / DIGIT / "+" / "-" / "." ) ":"
  std::size_t pos = 0;
  if (!ref.empty() && std::isalpha(static_cast<unsigned char>(ref[0]))) {
    std::size_t i = 1;
    while (i < ref.size() && (std::isalnum(static_cast<unsigned char>(ref[i])) || ref[i] == '+' ||
                              ref[i] == '-' || ref[i] == '.')) {
      ++i;
    }
    if (i < ref.size() && ref[i] == ':') {
      out.scheme = std::string(ref.substr(0, i));
      pos = i + 1;
    }
  }
  std::string_view rest = ref.substr(pos);
  if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
    out.fragment = std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
  }
  if (const auto q = rest.find('?'); q != std::string_view::npos) {
    out.query = std::string(rest.substr(q + 1));
    rest = rest.substr(0, q);
  }
  if (rest.substr(0, 2) == "//") {
    rest.remove_prefix(2);
    const auto slash = rest.find('/');
    out.authority = std::string(rest.substr(0, slash));
    rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
  }
  out.path = std::string(rest);
  return out;
}

std::string remove_dot_segments(std::string_view path) {
  std::string input(path);
  std::string output;
  while (!input.empty()) {
    if (input.rfind("../", 0) == 0) {
      input.erase(0, 3);
    } else if (input.rfind("./", 0) == 0) {
      input.erase(0, 2);
    } else if (input.rfind("/./", 0) == 0) {
      input.replace(0, 3, "/");
    } else if (input == "/.") {
      input = "/";
    } else if (input.rfind("/../", 0) == 0 || input == "/..") {
      input = input.size() == 3 ? std::string("/") : input.substr(3);
      const auto last = output.rfind('/');
      output.erase(last == std::string::npos ? 0 : last);
    } else if (input == "." || input == "..") {
      input.clear();
    } else {
      const std::size_t start = input[0] == '/' ? 1 : 0;
      const auto next = input.find('/', start);
      output.append(input, 0, next);
      input.erase(0, next);
    }
  }
  return output;
}

namespace {

std::string merge_paths(const Reference& base, std::string_view ref_path) {
  if (base.authority && base.path.empty()) return "/" + std::string(ref_path);
  const auto last = base.path.rfind('/');
  if (last == std::string::npos) return std::string(ref_path);
  return base.path.substr(0, last + 1) + std::string(ref_path);
}

}  // namespace

std::string resolve(std::string_view base_str, std::string_view ref_str) {
  const Reference base = parse(base_str);
  const Reference ref = parse(ref_str);
  Reference target;
  if (ref.scheme) {
    target = ref;
    target.path = remove_dot_segments(ref.path);
  } else {
    if (ref.authority) {
      target.authority = ref.authority;
      target.path = remove_dot_segments(ref.path);
      target.query = ref.query;
    } else {
      if (ref.path.empty()) {
        target.path = base.path;
        target.query = ref.query ? ref.query : base.query;
      } else {
        if (ref.path[0] == '/') {
          target.path = remove_dot_segments(ref.path);
        } else {
          target.path = remove_dot_segments(merge_paths(base, ref.path));
        }
        target.query = ref.query;
      }
      target.authority = base.authority;
    }
    target.scheme = base.scheme;
  }
  target.fragment = ref.fragment;
  return target.str();
}

std::string clean_attribute_url(std::string_view raw) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; };
  while (!raw.empty() && is_ws(raw.front())) raw.remove_prefix(1);
  while (!raw.empty() && is_ws(raw.back())) raw.remove_suffix(1);
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (c == '\t' || c == '\n' || c == '\r') continue;
    if (c == ' ') {
      out.append("%20");
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace archgraph::url
