#include "magflow/report.hpp"

#include <cmath>
#include <cstdio>

namespace magflow {

std::string format_number17(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json Json::object() {
  Json j;
  j.type_ = Type::Obj;
  return j;
}
Json Json::array() {
  Json j;
  j.type_ = Type::Arr;
  return j;
}
Json Json::number(double v) {
  Json j;
  j.type_ = Type::Num;
  j.num_ = v;
  return j;
}
Json Json::integer(long long v) {
  Json j;
  j.type_ = Type::Int;
  j.int_ = v;
  return j;
}
Json Json::boolean(bool v) {
  Json j;
  j.type_ = Type::Bool;
  j.bool_ = v;
  return j;
}
Json Json::string(std::string v) {
  Json j;
  j.type_ = Type::Str;
  j.str_ = std::move(v);
  return j;
}

Json& Json::set(const std::string& key, Json v) {
  obj_.emplace_back(key, std::move(v));
  return *this;
}

Json& Json::push(Json v) {
  arr_.push_back(std::move(v));
  return *this;
}

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
}

}  // namespace

void Json::dump_to(std::string& out, int indent, int depth) const {
  const std::string pad(std::size_t(indent) * (depth + 1), ' ');
  const std::string padc(std::size_t(indent) * depth, ' ');
  switch (type_) {
    case Type::Null:
      out += "null";
      break;
    case Type::Bool:
      out += bool_ ? "true" : "false";
      break;
    case Type::Int: {
      out += std::to_string(int_);
      break;
    }
    case Type::Num:
      out += format_number17(num_);
      break;
    case Type::Str:
      append_escaped(out, str_);
      break;
    case Type::Arr: {
      if (arr_.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < arr_.size(); ++i) {
        out += pad;
        arr_[i].dump_to(out, indent, depth + 1);
        if (i + 1 < arr_.size()) out += ',';
        out += '\n';
      }
      out += padc + "]";
      break;
    }
    case Type::Obj: {
      if (obj_.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      for (std::size_t i = 0; i < obj_.size(); ++i) {
        out += pad;
        append_escaped(out, obj_[i].first);
        out += ": ";
        obj_[i].second.dump_to(out, indent, depth + 1);
        if (i + 1 < obj_.size()) out += ',';
        out += '\n';
      }
      out += padc + "}";
      break;
    }
  }
}

std::string Json::dump(int indent) const {
  std::string out;
  dump_to(out, indent, 0);
  out += '\n';
  return out;
}

}  // namespace magflow
