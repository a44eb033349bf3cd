#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "raftlab/error.hpp"
#include "raftlab/ingest.hpp"

namespace raftlab {

namespace {

struct Attribute {
  std::string name;
  std::string value;
};

// Minimal non-validating XML scanner covering what test reporters emit:
// prolog, comments, CDATA, DOCTYPE, elements, attributes and the predefined
// and numeric character references.
class XmlScanner {
 public:
  explicit XmlScanner(std::string_view text) : text_(text) {}

  struct Handler {
    virtual ~Handler() = default;
    virtual void start(const std::string& name, const std::vector<Attribute>& attrs) = 0;
    virtual void end(const std::string& name) = 0;
  };

  void run(Handler& handler) {
    std::vector<std::string> stack;
    bool seen_root = false;
    skip_bom();
    while (pos_ < text_.size()) {
      if (text_[pos_] != '<') {
        while (pos_ < text_.size() && text_[pos_] != '<') {
          if (stack.empty() && !is_space(text_[pos_]))
            fail(pos_, "character data outside the root element");
          if (text_[pos_] == '&')
            decode_reference();
          else
            ++pos_;
        }
        continue;
      }
      if (starts_with("<?")) {
        skip_past("?>", "unterminated processing instruction");
      } else if (starts_with("<!--")) {
        skip_past("-->", "unterminated comment");
      } else if (starts_with("<![CDATA[")) {
        if (stack.empty()) fail(pos_, "CDATA section outside the root element");
        skip_past("]]>", "unterminated CDATA section");
      } else if (starts_with("<!DOCTYPE")) {
        skip_doctype();
      } else if (starts_with("</")) {
        const std::size_t at = pos_;
        pos_ += 2;
        std::string name = read_name();
        skip_spaces();
        expect('>');
        if (stack.empty() || stack.back() != name)
          fail(at, "mismatched end tag </" + name + ">");
        stack.pop_back();
        handler.end(name);
      } else {
        const std::size_t at = pos_;
        ++pos_;
        std::string name = read_name();
        if (stack.empty() && seen_root) fail(at, "more than one root element");
        seen_root = true;
        std::vector<Attribute> attrs;
        for (;;) {
          const bool had_space = skip_spaces();
          if (pos_ >= text_.size()) fail(pos_, "unterminated start tag <" + name + ">");
          if (text_[pos_] == '/') {
            ++pos_;
            expect('>');
            handler.start(name, attrs);
            handler.end(name);
            break;
          }
          if (text_[pos_] == '>') {
            ++pos_;
            stack.push_back(name);
            handler.start(name, attrs);
            break;
          }
          if (!had_space) fail(pos_, "expected whitespace before attribute");
          Attribute a;
          a.name = read_name();
          skip_spaces();
          expect('=');
          skip_spaces();
          a.value = read_quoted();
          for (const auto& prev : attrs)
            if (prev.name == a.name) fail(pos_, "duplicate attribute '" + a.name + "'");
          attrs.push_back(std::move(a));
        }
      }
    }
    if (!stack.empty()) fail(text_.size(), "unexpected end of document inside <" + stack.back() + ">");
    if (!seen_root) fail(text_.size(), "document has no root element");
  }

 private:
  [[noreturn]] void fail(std::size_t offset, const std::string& what) const {
    throw ParseError("malformed XML at byte offset " + std::to_string(offset) + ": " + what);
  }

  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

  static bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == ':' || c == '-' || c == '.' || static_cast<unsigned char>(c) >= 0x80;
  }

  void skip_bom() {
    if (text_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
  }

  bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  bool skip_spaces() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    return pos_ != start;
  }

  void skip_past(std::string_view terminator, const char* what) {
    const auto end = text_.find(terminator, pos_);
    if (end == std::string_view::npos) fail(pos_, what);
    pos_ = end + terminator.size();
  }

  void skip_doctype() {
    int bracket = 0;
    const std::size_t at = pos_;
    for (pos_ += 9; pos_ < text_.size(); ++pos_) {
      const char c = text_[pos_];
      if (c == '[') ++bracket;
      else if (c == ']') --bracket;
      else if (c == '>' && bracket == 0) {
        ++pos_;
        return;
      }
    }
    fail(at, "unterminated DOCTYPE");
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c)
      fail(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail(start, "expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string read_quoted() {
    if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\''))
      fail(pos_, "expected a quoted attribute value");
    const char quote = text_[pos_++];
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != quote) {
      if (text_[pos_] == '<') fail(pos_, "'<' in attribute value");
      if (text_[pos_] == '&')
        out += decode_reference();
      else
        out += text_[pos_++];
    }
    if (pos_ >= text_.size()) fail(pos_, "unterminated attribute value");
    ++pos_;
    return out;
  }

  std::string decode_reference() {
    const std::size_t at = pos_;
    const auto semi = text_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 12) fail(at, "malformed entity reference");
    const std::string_view ref = text_.substr(pos_ + 1, semi - pos_ - 1);
    pos_ = semi + 1;
    if (ref == "lt") return "<";
    if (ref == "gt") return ">";
    if (ref == "amp") return "&";
    if (ref == "quot") return "\"";
    if (ref == "apos") return "'";
    if (ref.size() > 1 && ref[0] == '#') {
      std::uint32_t cp = 0;
      const bool hex = ref[1] == 'x' || ref[1] == 'X';
      const auto digits = ref.substr(hex ? 2 : 1);
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
      if (ec != std::errc() || p != digits.data() + digits.size() || cp > 0x10FFFF || digits.empty())
        fail(at, "malformed character reference");
      return encode_utf8(cp);
    }
    fail(at, "unknown entity '&" + std::string(ref) + ";'");
  }

  static std::string encode_utf8(std::uint32_t cp) {
    std::string s;
    if (cp < 0x80) {
      s += static_cast<char>(cp);
    } else if (cp < 0x800) {
      s += static_cast<char>(0xC0 | (cp >> 6));
      s += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      s += static_cast<char>(0xE0 | (cp >> 12));
      s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      s += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      s += static_cast<char>(0xF0 | (cp >> 18));
      s += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      s += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return s;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

const std::string* find_attr(const std::vector<Attribute>& attrs, std::string_view name) {
  for (const auto& a : attrs)
    if (a.name == name) return &a.value;
  return nullptr;
}

std::string first_line_trimmed(std::string_view s) {
  const auto nl = s.find_first_of("\r\n");
  if (nl != std::string_view::npos) s = s.substr(0, nl);
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

class JUnitCollector : public XmlScanner::Handler {
 public:
  std::vector<TestOutcome> outcomes;

  void start(const std::string& name, const std::vector<Attribute>& attrs) override {
    ++depth_;
    if (name == "testcase" && !current_) {
      current_.emplace();
      case_depth_ = depth_;
      const std::string* cls = find_attr(attrs, "classname");
      const std::string* nm = find_attr(attrs, "name");
      const std::string cls_id = cls ? normalize_test_id(*cls) : std::string();
      const std::string name_id = nm ? normalize_test_id(*nm) : std::string();
      current_->outcome.test_id = cls_id.empty() ? name_id : cls_id + "::" + name_id;
      if (const std::string* t = find_attr(attrs, "time")) {
        double secs = 0.0;
        auto [p, ec] = std::from_chars(t->data(), t->data() + t->size(), secs);
        if (ec == std::errc() && p == t->data() + t->size() && secs >= 0.0)
          current_->outcome.duration_seconds = secs;
      }
      return;
    }
    if (current_ && depth_ == case_depth_ + 1) {
      if (name == "failure" || name == "error") {
        if (current_->outcome.status == TestStatus::Pass) {
          current_->outcome.status = TestStatus::Fail;
          std::string detail;
          if (const std::string* m = find_attr(attrs, "message")) detail = first_line_trimmed(*m);
          if (detail.empty())
            if (const std::string* t = find_attr(attrs, "type")) detail = first_line_trimmed(*t);
          current_->outcome.failure_kind = detail.empty() ? name : name + ":" + detail;
        }
      } else if (name == "skipped") {
        current_->skipped = true;
      }
    }
  }

  void end(const std::string& name) override {
    if (current_ && depth_ == case_depth_ && name == "testcase") {
      const bool failed = current_->outcome.status == TestStatus::Fail;
      if (!current_->outcome.test_id.empty() && (failed || !current_->skipped))
        outcomes.push_back(std::move(current_->outcome));
      current_.reset();
    }
    --depth_;
  }

 private:
  struct Pending {
    TestOutcome outcome;
    bool skipped = false;
  };
  std::optional<Pending> current_;
  int depth_ = 0;
  int case_depth_ = 0;
};

}  // namespace

std::string normalize_test_id(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::vector<TestOutcome> parse_junit_xml(std::string_view bytes) {
  JUnitCollector collector;
  XmlScanner(bytes).run(collector);
  return merge_duplicate_outcomes(std::move(collector.outcomes));
}

}  // namespace raftlab
