#include "iab/corpus.hpp"

#include <algorithm>
#include <cctype>

namespace iab::corpus {

namespace {

bool is_tag_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-';
}

std::string decode_entities(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size();) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        size_t semi = s.find(';', i);
        if (semi == std::string::npos || semi - i > 8) {
            out.push_back(s[i++]);
            continue;
        }
        std::string name = s.substr(i + 1, semi - i - 1);
        if (name == "amp") out.push_back('&');
        else if (name == "lt") out.push_back('<');
        else if (name == "gt") out.push_back('>');
        else if (name == "quot") out.push_back('"');
        else if (name == "apos" || name == "#39") out.push_back('\'');
        else if (name == "nbsp" || name == "#160") out.push_back(' ');
        else if (!name.empty() && name[0] == '#') {
            try {
                long code = name[1] == 'x' || name[1] == 'X'
                                ? std::stol(name.substr(2), nullptr, 16)
                                : std::stol(name.substr(1));
                if (code > 0 && code < 128) out.push_back(static_cast<char>(code));
                else out.push_back(' ');
            } catch (const std::exception&) {
                out.push_back(' ');
            }
        } else {
            out.append(s, i, semi - i + 1);
        }
        i = semi + 1;
    }
    return out;
}

std::string collapse_spaces(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

struct Token {
    enum Kind { open, close, selfclose, text } kind;
    std::string name; // lowercased tag name for tags
    std::string body; // raw text for text tokens
};

std::vector<Token> tokenize(const std::string& html) {
    std::vector<Token> tokens;
    size_t i = 0;
    const size_t n = html.size();
    while (i < n) {
        if (html[i] != '<') {
            size_t next = html.find('<', i);
            if (next == std::string::npos) next = n;
            tokens.push_back({Token::text, {}, html.substr(i, next - i)});
            i = next;
            continue;
        }
        if (html.compare(i, 4, "<!--") == 0) {
            size_t end = html.find("-->", i + 4);
            i = end == std::string::npos ? n : end + 3;
            continue;
        }
        if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?')) {
            size_t end = html.find('>', i);
            i = end == std::string::npos ? n : end + 1;
            continue;
        }
        size_t end = html.find('>', i);
        if (end == std::string::npos) break;
        std::string inner = html.substr(i + 1, end - i - 1);
        bool closing = !inner.empty() && inner[0] == '/';
        bool selfclosing = !inner.empty() && inner.back() == '/';
        size_t name_start = closing ? 1 : 0;
        size_t name_end = name_start;
        while (name_end < inner.size() && is_tag_name_char(inner[name_end])) ++name_end;
        std::string name = to_lower(inner.substr(name_start, name_end - name_start));
        if (name.empty()) {
            i = end + 1;
            continue;
        }
        if (closing) tokens.push_back({Token::close, name, {}});
        else if (selfclosing) tokens.push_back({Token::selfclose, name, {}});
        else tokens.push_back({Token::open, name, {}});
        i = end + 1;

        // raw-content elements: swallow everything up to the matching close tag
        if (!closing && !selfclosing && (name == "script" || name == "style")) {
            std::string close_tag = "</" + name;
            size_t close_pos = std::string::npos;
            for (size_t j = i; j + close_tag.size() <= n; ++j) {
                if (html[j] != '<') continue;
                if (starts_with_ci(std::string_view(html).substr(j), close_tag)) {
                    close_pos = j;
                    break;
                }
            }
            if (close_pos == std::string::npos) {
                i = n;
            } else {
                size_t gt = html.find('>', close_pos);
                i = gt == std::string::npos ? n : gt + 1;
            }
            tokens.pop_back(); // drop the open token; content is discarded
        }
    }
    return tokens;
}

bool is_noise_container(const std::string& name) {
    return name == "head" || name == "nav" || name == "header" || name == "footer" ||
           name == "aside" || name == "form" || name == "noscript" || name == "svg" ||
           name == "figure" || name == "iframe" || name == "button" || name == "select";
}

bool is_block_break(const std::string& name) {
    return name == "p" || name == "div" || name == "section" || name == "article" ||
           name == "li" || name == "ul" || name == "ol" || name == "blockquote" ||
           name == "h1" || name == "h2" || name == "h3" || name == "h4" || name == "h5" ||
           name == "h6" || name == "br" || name == "tr" || name == "table" || name == "main" ||
           name == "body" || name == "title";
}

} // namespace

std::string extract_main_text(const std::string& html) {
    auto tokens = tokenize(html);

    // depth counters for containers whose content is boilerplate
    std::map<std::string, int> suppress;
    int suppressed = 0;

    std::vector<std::string> blocks;
    std::string current;
    auto flush = [&] {
        std::string cleaned = collapse_spaces(decode_entities(current));
        if (!cleaned.empty()) blocks.push_back(std::move(cleaned));
        current.clear();
    };

    for (const auto& tok : tokens) {
        switch (tok.kind) {
            case Token::open:
                if (is_noise_container(tok.name)) {
                    ++suppress[tok.name];
                    ++suppressed;
                }
                if (is_block_break(tok.name)) flush();
                break;
            case Token::close:
                if (is_noise_container(tok.name) && suppress[tok.name] > 0) {
                    --suppress[tok.name];
                    --suppressed;
                }
                if (is_block_break(tok.name)) flush();
                break;
            case Token::selfclose:
                if (is_block_break(tok.name)) flush();
                break;
            case Token::text:
                if (suppressed == 0) current += tok.body;
                break;
        }
    }
    flush();

    std::string out;
    for (const auto& block : blocks) {
        // skip link-farm crumbs that survive the container filter
        if (block.size() < 2) continue;
        if (!out.empty()) out += "\n\n";
        out += block;
    }
    return out;
}

} // namespace iab::corpus
