#include <string_view>
#include <vector>

#include "argjudge/prompt_kit.hpp"

namespace argjudge {

std::vector<std::string_view> balanced_object_spans(std::string_view text) {
  std::vector<std::string_view> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t j = i;
    for (; j < text.size(); ++j) {
      const char c = text[j];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) break;
      }
    }
    if (j >= text.size()) {
      // Unbalanced from here; a later '{' may still open a complete object.
      i = start + 1;
      continue;
    }
    spans.push_back(text.substr(start, j - start + 1));
    i = j + 1;
  }
  return spans;
}

}  // namespace argjudge
