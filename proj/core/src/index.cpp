// SPDX-License-Identifier: Apache-2.0
#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pfa/code_model.hpp"
#include "pfa/error.hpp"
#include "pfa/hash.hpp"
#include "pfa/lexer.hpp"

namespace pfa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kIndexCacheVersion = 1;

std::vector<std::string> split_lines(const std::string& content) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : content) {
        if (c == '\n') {
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
    return lines;
}

std::size_t match_close(const std::vector<Token>& toks, std::size_t open, std::string_view o, std::string_view c) {
    int depth = 0;
    for (std::size_t k = open; k < toks.size(); ++k) {
        if (toks[k].kind != TokenKind::Punct) continue;
        if (toks[k].text == o) ++depth;
        if (toks[k].text == c && --depth == 0) return k;
    }
    return toks.size();
}

std::vector<std::string> param_names(const std::vector<Token>& toks, std::size_t open, std::size_t close) {
    std::vector<std::string> names;
    std::size_t start = open + 1;
    int depth = 0;
    auto flush = [&](std::size_t end) {
        std::string name;
        // Function-pointer parameter: `int (*cb)(int)`.
        for (std::size_t k = start; k + 2 < end; ++k) {
            if (toks[k].is("(") && toks[k + 1].is("*") && toks[k + 2].is_ident()) {
                names.push_back(toks[k + 2].text);
                return;
            }
        }
        for (std::size_t k = start; k < end; ++k) {
            if (toks[k].is("[")) break;
            if (toks[k].is_ident() && !is_c_keyword(toks[k].text)) name = toks[k].text;
        }
        const bool only_void = end == start + 1 && toks[start].is("void");
        if (!name.empty() && !only_void && !(end > start && toks[start].is("..."))) names.push_back(name);
    };
    for (std::size_t k = open + 1; k < close; ++k) {
        const Token& t = toks[k];
        if (t.is("(") || t.is("[")) ++depth;
        if (t.is(")") || t.is("]")) --depth;
        if (depth == 0 && t.is(",")) {
            flush(k);
            start = k + 1;
        }
    }
    if (close > start) flush(close);
    return names;
}

bool excluded(const std::string& rel, const std::vector<std::string>& globs) {
    return std::any_of(globs.begin(), globs.end(),
                       [&](const std::string& g) { return fnmatch(g.c_str(), rel.c_str(), 0) == 0; });
}

json def_to_json(const FunctionDef& d) {
    return json{{"name", d.name}, {"file", d.file}, {"begin_line", d.begin_line}, {"body_line", d.body_line},
                {"end_line", d.end_line}, {"text", d.text}, {"params", d.params}};
}

FunctionDef def_from_json(const json& j) {
    FunctionDef d;
    d.name = j.at("name").get<std::string>();
    d.file = j.at("file").get<std::string>();
    d.begin_line = j.at("begin_line").get<int>();
    d.body_line = j.at("body_line").get<int>();
    d.end_line = j.at("end_line").get<int>();
    d.text = j.at("text").get<std::string>();
    d.params = j.at("params").get<std::vector<std::string>>();
    return d;
}

}  // namespace

std::pair<std::vector<FunctionDef>, std::vector<MacroDef>> CodeIndex::scan(const std::string& rel,
                                                                         const std::string& content) {
    std::vector<FunctionDef> defs;
    std::vector<MacroDef> macros;
    const auto toks = lex_c(content);
    std::size_t decl_start = 0;
    int depth = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (t.kind == TokenKind::Directive) {
            std::istringstream in(t.text.substr(1));
            std::string word;
            in >> word;
            if (word == "define") {
                std::string rest;
                std::getline(in, rest);
                rest.erase(0, rest.find_first_not_of(" \t"));
                std::size_t name_end = 0;
                while (name_end < rest.size() && (std::isalnum(static_cast<unsigned char>(rest[name_end])) ||
                                                  rest[name_end] == '_')) {
                    ++name_end;
                }
                if (name_end > 0) {
                    MacroDef m{rest.substr(0, name_end), rel, t.line, t.text,
                               name_end < rest.size() && rest[name_end] == '('};
                    macros.push_back(std::move(m));
                }
            }
            if (depth == 0) decl_start = i + 1;
            continue;
        }
        if (t.kind == TokenKind::Punct) {
            if (t.text == "{") ++depth;
            if (t.text == "}") {
                --depth;
                if (depth == 0) decl_start = i + 1;
            }
            if (depth == 0 && t.text == ";") decl_start = i + 1;
            continue;
        }
        if (depth != 0 || !t.is_ident() || is_c_keyword(t.text)) continue;
        if (i + 1 >= toks.size() || !toks[i + 1].is("(")) continue;
        const std::size_t close = match_close(toks, i + 1, "(", ")");
        if (close >= toks.size()) continue;
        // Skip attribute-like trailers between ')' and '{'.
        std::size_t k = close + 1;
        while (k < toks.size()) {
            if (toks[k].is_ident()) {
                ++k;
                if (k < toks.size() && toks[k].is("(")) k = match_close(toks, k, "(", ")") + 1;
                continue;
            }
            break;
        }
        if (k >= toks.size() || !toks[k].is("{")) continue;
        if (i > 0 && (toks[i - 1].is("=") || toks[i - 1].is(".") || toks[i - 1].is("->"))) continue;
        const std::size_t body_close = match_close(toks, k, "{", "}");
        if (body_close >= toks.size()) {
            throw Error(ErrorCode::ParseError, rel + ":" + std::to_string(toks[k].line) + ": unbalanced braces");
        }
        FunctionDef d;
        d.name = t.text;
        d.file = rel;
        const Token& first = toks[std::min(decl_start, i)];
        d.begin_line = first.line;
        d.body_line = toks[k].line;
        d.end_line = toks[body_close].line;
        const std::size_t begin_off = first.offset - static_cast<std::size_t>(first.column - 1);
        d.text = content.substr(begin_off, toks[body_close].offset + 1 - begin_off);
        d.params = param_names(toks, i + 1, close);
        defs.push_back(std::move(d));
        i = body_close;
        decl_start = body_close + 1;
    }
    return {std::move(defs), std::move(macros)};
}

void CodeIndex::add_scanned(const std::string& rel, const std::string& content, std::vector<FunctionDef> defs,
                            std::vector<MacroDef> macros) {
    for (auto& d : defs) functions_[d.name].push_back(std::move(d));
    for (auto& m : macros) macros_.try_emplace(m.name, std::move(m));
    lines_[rel] = split_lines(content);
}

void CodeIndex::add_file(const std::string& rel, const std::string& content) {
    auto [defs, macros] = scan(rel, content);
    add_scanned(rel, content, std::move(defs), std::move(macros));
}

std::size_t CodeIndex::function_count() const {
    std::size_t n = 0;
    for (const auto& [_, defs] : functions_) n += defs.size();
    return n;
}

const FunctionDef* CodeIndex::enclosing(const std::string& file, int line) const {
    for (const auto& [_, defs] : functions_) {
        for (const auto& d : defs) {
            if (d.file == file && d.begin_line <= line && line <= d.end_line) return &d;
        }
    }
    return nullptr;
}

const FunctionDef* CodeIndex::find(const FunctionRef& ref) const {
    auto it = functions_.find(ref.name);
    if (it == functions_.end()) return nullptr;
    for (const auto& d : it->second) {
        if (d.file == ref.file) return &d;
    }
    return nullptr;
}

int CodeIndex::line_count(const std::string& file) const {
    auto it = lines_.find(file);
    return it == lines_.end() ? 0 : static_cast<int>(it->second.size());
}

std::string CodeIndex::line_text(const std::string& file, int line) const {
    auto it = lines_.find(file);
    if (it == lines_.end() || line < 1 || line > static_cast<int>(it->second.size())) return {};
    return it->second[static_cast<std::size_t>(line - 1)];
}

CodeIndex build_index(const fs::path& root, const IndexOptions& options) {
    if (!fs::is_directory(root)) throw Error(ErrorCode::NotFound, "project root not found: " + root.string());
    CodeIndex index(root);

    json cache_in;
    if (options.cache_path && fs::exists(*options.cache_path)) {
        try {
            std::ifstream in(*options.cache_path);
            cache_in = json::parse(in);
            if (cache_in.value("version", 0) != kIndexCacheVersion) cache_in = json();
        } catch (const json::exception&) {
            cache_in = json();
        }
    }
    json cache_out{{"version", kIndexCacheVersion}, {"files", json::object()}};

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext != ".c" && ext != ".h") continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        const std::string rel = fs::relative(path, root).generic_string();
        if (excluded(rel, options.exclude_globs)) continue;
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string content = ss.str();
        const std::string digest = sha256_hex(content);

        const json* cached = nullptr;
        if (cache_in.contains("files") && cache_in["files"].contains(rel) &&
            cache_in["files"][rel].value("hash", "") == digest) {
            cached = &cache_in["files"][rel];
        }
        try {
            std::vector<FunctionDef> defs;
            std::vector<MacroDef> macros;
            if (cached != nullptr) {
                for (const auto& j : cached->at("functions")) defs.push_back(def_from_json(j));
                for (const auto& j : cached->at("macros")) {
                    macros.push_back(MacroDef{j.at("name"), rel, j.at("line"), j.at("text"), j.at("function_like")});
                }
            } else {
                std::tie(defs, macros) = CodeIndex::scan(rel, content);
            }
            json jf{{"hash", digest}, {"functions", json::array()}, {"macros", json::array()}};
            for (const auto& d : defs) jf["functions"].push_back(def_to_json(d));
            for (const auto& m : macros) {
                jf["macros"].push_back(
                    {{"name", m.name}, {"line", m.line}, {"text", m.text}, {"function_like", m.function_like}});
            }
            cache_out["files"][rel] = std::move(jf);
            index.add_scanned(rel, content, std::move(defs), std::move(macros));
        } catch (const Error& e) {
            std::cerr << "warning: skipping " << rel << ": " << e.what() << "\n";
        }
    }
    if (index.function_count() == 0) {
        throw Error(ErrorCode::EmptyIndex, "no function definitions under " + root.string());
    }
    if (options.cache_path) {
        std::ofstream out(*options.cache_path);
        out << cache_out.dump(1) << "\n";
    }
    return index;
}

std::vector<int> call_lines(const FunctionDef& def, const std::string& callee) {
    std::vector<int> lines;
    const auto toks = lex_c(def.text, def.begin_line);
    bool in_body = false;
    for (std::size_t k = 0; k + 1 < toks.size(); ++k) {
        if (toks[k].is("{")) in_body = true;
        if (in_body && toks[k].is_ident() && toks[k].text == callee && toks[k + 1].is("(") &&
            (lines.empty() || lines.back() != toks[k].line)) {
            lines.push_back(toks[k].line);
        }
    }
    return lines;
}

FunctionDef retrieve_function(const CodeIndex& index, const std::string& name,
                              const std::optional<std::string>& hint_file) {
    auto it = index.functions().find(name);
    if (it != index.functions().end() && !it->second.empty()) {
        const auto& defs = it->second;
        if (defs.size() == 1) return defs.front();
        if (hint_file) {
            for (const auto& d : defs) {
                if (d.file == *hint_file) return d;
            }
        }
        throw Error(ErrorCode::Ambiguous, name + " has " + std::to_string(defs.size()) + " definitions");
    }
    auto m = index.macros().find(name);
    if (m != index.macros().end()) {
        FunctionDef d;
        d.name = m->second.name;
        d.file = m->second.file;
        d.begin_line = d.body_line = d.end_line = m->second.line;
        d.text = m->second.text;
        d.is_macro = true;
        return d;
    }
    throw Error(ErrorCode::NotFound, "no definition for " + name);
}

}  // namespace pfa
