#include "xsum/ingest.hpp"

#include <algorithm>

#include "xsum/error.hpp"

namespace xsum {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' || c >= 0x80;
}

bool is_name_char(unsigned char c) {
  return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

bool all_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_space(c); });
}

// Returns the offset of the first invalid UTF-8 byte, or npos.
std::size_t find_bad_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
    if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return i;
    i += len;
  }
  return std::string_view::npos;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

XmlReader::XmlReader(std::string_view input) : in_(input) {
  if (auto bad = find_bad_utf8(in_); bad != std::string_view::npos) fail("invalid UTF-8", bad);
  // Byte order mark.
  if (in_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
}

void XmlReader::fail(const std::string& what, std::size_t at) const {
  throw Error(ErrorCode::MalformedXml, what, at);
}

void XmlReader::skip_ws() {
  while (pos_ < in_.size() && is_space(in_[pos_])) ++pos_;
}

std::string XmlReader::read_name() {
  const std::size_t start = pos_;
  if (pos_ >= in_.size() || !is_name_start(static_cast<unsigned char>(in_[pos_]))) fail("expected a name", pos_);
  while (pos_ < in_.size() && is_name_char(static_cast<unsigned char>(in_[pos_]))) ++pos_;
  return std::string(in_.substr(start, pos_ - start));
}

std::string XmlReader::decode(std::string_view raw, std::size_t at) const {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '<') fail("'<' in character data", at + i);
    if (c != '&') {
      out += c;
      continue;
    }
    const auto semi = raw.find(';', i);
    if (semi == std::string_view::npos) fail("unterminated entity reference", at + i);
    const auto ent = raw.substr(i + 1, semi - i - 1);
    if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "amp") out += '&';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (ent.size() > 1 && ent[0] == '#') {
      std::uint32_t cp = 0;
      const bool hex = ent[1] == 'x';
      const auto digits = ent.substr(hex ? 2 : 1);
      if (digits.empty()) fail("empty character reference", at + i);
      for (char d : digits) {
        std::uint32_t v;
        if (d >= '0' && d <= '9') v = d - '0';
        else if (hex && d >= 'a' && d <= 'f') v = d - 'a' + 10;
        else if (hex && d >= 'A' && d <= 'F') v = d - 'A' + 10;
        else fail("bad character reference", at + i);
        cp = cp * (hex ? 16 : 10) + v;
        if (cp > 0x10FFFF) fail("character reference out of range", at + i);
      }
      if (cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) fail("invalid character reference", at + i);
      append_utf8(out, cp);
    } else {
      fail("unknown entity '" + std::string(ent) + "'", at + i);
    }
    i = semi;
  }
  return out;
}

void XmlReader::skip_comment() {
  const auto end = in_.find("-->", pos_ + 4);
  if (end == std::string_view::npos) fail("unterminated comment", pos_);
  pos_ = end + 3;
}

void XmlReader::skip_pi() {
  const auto end = in_.find("?>", pos_ + 2);
  if (end == std::string_view::npos) fail("unterminated processing instruction", pos_);
  pos_ = end + 2;
}

void XmlReader::skip_doctype() {
  if (seen_root_) fail("DOCTYPE after the root element", pos_);
  std::size_t i = pos_ + 9;
  int bracket = 0;
  for (; i < in_.size(); ++i) {
    const char c = in_[i];
    if (c == '[') ++bracket;
    else if (c == ']') --bracket;
    else if (c == '>' && bracket == 0) break;
  }
  if (i >= in_.size()) fail("unterminated DOCTYPE", pos_);
  pos_ = i + 1;
}

void XmlReader::read_cdata(std::string& text) {
  const auto end = in_.find("]]>", pos_ + 9);
  if (end == std::string_view::npos) fail("unterminated CDATA section", pos_);
  text.append(in_.substr(pos_ + 9, end - pos_ - 9));
  pos_ = end + 3;
}

void XmlReader::flush_text(std::string& text) {
  if (!text.empty() && !all_space(text)) {
    NodeEvent ev;
    ev.kind = NodeKind::Text;
    ev.label = std::string(kTextLabel);
    ev.value = std::move(text);
    pending_.push_back(std::move(ev));
  }
  text.clear();
}

void XmlReader::parse_start_tag() {
  const std::size_t tag_at = pos_;
  ++pos_;  // '<'
  std::string name = read_name();
  if (open_.empty()) {
    if (seen_root_) fail("more than one root element", tag_at);
    seen_root_ = true;
  }
  NodeEvent start;
  start.kind = NodeKind::ElementStart;
  start.label = name;
  pending_.push_back(std::move(start));

  std::vector<std::string> seen;
  for (;;) {
    const std::size_t before = pos_;
    skip_ws();
    if (pos_ >= in_.size()) fail("unterminated start tag", tag_at);
    if (in_[pos_] == '>') {
      ++pos_;
      open_.push_back(std::move(name));
      return;
    }
    if (in_.substr(pos_, 2) == "/>") {
      pos_ += 2;
      NodeEvent end;
      end.kind = NodeKind::ElementEnd;
      end.label = std::move(name);
      pending_.push_back(std::move(end));
      if (open_.empty()) done_ = true;
      return;
    }
    if (before == pos_) fail("expected whitespace before attribute", pos_);
    const std::size_t attr_at = pos_;
    std::string attr = read_name();
    skip_ws();
    if (pos_ >= in_.size() || in_[pos_] != '=') fail("expected '=' after attribute name", pos_);
    ++pos_;
    skip_ws();
    if (pos_ >= in_.size() || (in_[pos_] != '"' && in_[pos_] != '\'')) fail("expected quoted attribute value", pos_);
    const char quote = in_[pos_++];
    const auto close = in_.find(quote, pos_);
    if (close == std::string_view::npos) fail("unterminated attribute value", attr_at);
    if (std::find(seen.begin(), seen.end(), attr) != seen.end()) fail("duplicate attribute '" + attr + "'", attr_at);
    seen.push_back(attr);
    NodeEvent ev;
    ev.kind = NodeKind::Attribute;
    ev.label = "@" + attr;
    ev.value = decode(in_.substr(pos_, close - pos_), pos_);
    pending_.push_back(std::move(ev));
    pos_ = close + 1;
  }
}

void XmlReader::parse_end_tag() {
  const std::size_t tag_at = pos_;
  pos_ += 2;
  std::string name = read_name();
  skip_ws();
  if (pos_ >= in_.size() || in_[pos_] != '>') fail("malformed end tag", tag_at);
  ++pos_;
  if (open_.empty() || open_.back() != name) fail("mismatched end tag </" + name + ">", tag_at);
  open_.pop_back();
  NodeEvent end;
  end.kind = NodeKind::ElementEnd;
  end.label = std::move(name);
  pending_.push_back(std::move(end));
  if (open_.empty()) done_ = true;
}

void XmlReader::fill() {
  std::string text;
  while (pending_.empty()) {
    if (pos_ >= in_.size()) {
      if (!open_.empty()) fail("unexpected end of input inside <" + open_.back() + ">", pos_);
      if (!seen_root_) throw Error(ErrorCode::EmptyDocument, "no root element");
      return;
    }
    const std::size_t lt = in_.find('<', pos_);
    const std::size_t stop = lt == std::string_view::npos ? in_.size() : lt;
    if (stop > pos_) {
      const auto raw = in_.substr(pos_, stop - pos_);
      if (open_.empty()) {
        if (!all_space(raw)) fail("character data outside the root element", pos_);
      } else {
        text += decode(raw, pos_);
      }
      pos_ = stop;
      continue;
    }
    // pos_ is at '<'
    const auto rest = in_.substr(pos_);
    if (rest.starts_with("<!--")) {
      skip_comment();
    } else if (rest.starts_with("<![CDATA[")) {
      if (open_.empty()) fail("CDATA outside the root element", pos_);
      read_cdata(text);
    } else if (rest.starts_with("<!DOCTYPE")) {
      skip_doctype();
    } else if (rest.starts_with("<?")) {
      skip_pi();
    } else if (rest.starts_with("</")) {
      flush_text(text);
      parse_end_tag();
    } else {
      if (done_) fail("content after the root element", pos_);
      flush_text(text);
      parse_start_tag();
    }
  }
  // Pending text has been flushed ahead of the tag that ended it.
}

std::optional<NodeEvent> XmlReader::next() {
  if (pending_.empty()) fill();
  if (pending_.empty()) return std::nullopt;
  NodeEvent ev = std::move(pending_.front());
  pending_.pop_front();
  return ev;
}

NodeEvent& IdAssigner::stamp(NodeEvent& ev) {
  switch (ev.kind) {
    case NodeKind::ElementStart: {
      const auto depth = static_cast<std::uint32_t>(stack_.size() + 1);
      ev.id = {++next_pre_, 0, depth};
      stack_.push_back({ev.id.pre, depth});
      last_pre_ = ev.id.pre;
      value_ordinal_ = 0;
      max_depth_ = std::max<std::size_t>(max_depth_, depth);
      break;
    }
    case NodeKind::ElementEnd: {
      if (stack_.empty()) throw Error(ErrorCode::MalformedXml, "end event without an open element");
      const Open top = stack_.back();
      stack_.pop_back();
      ev.id = {top.pre, ++next_post_, top.depth};
      break;
    }
    case NodeKind::Attribute:
    case NodeKind::Text: {
      if (stack_.empty()) throw Error(ErrorCode::MalformedXml, "value node outside any element");
      ev.id = {last_pre_, ++value_ordinal_, stack_.back().depth + 1};
      max_depth_ = std::max<std::size_t>(max_depth_, ev.id.depth);
      break;
    }
  }
  return ev;
}

std::vector<NodeEvent> read_events(std::string_view input) {
  std::vector<NodeEvent> out;
  EventSource src(input);
  while (auto ev = src.next()) out.push_back(std::move(*ev));
  return out;
}

std::string escape_xml(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace xsum
