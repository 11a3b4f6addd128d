#include <doctest.h>

#include "iab/corpus.hpp"
#include "test_util.hpp"

using namespace iab;
using namespace iab::corpus;

namespace {

Document make_doc(std::string text) {
    Document doc;
    doc.ref.url = "http://docs.test/sample";
    doc.ref.title = "Sample";
    doc.doc_id = "d0000000000000001";
    doc.text = std::move(text);
    return doc;
}

} // namespace

TEST_CASE("doc ids are stable hashes of the url") {
    std::string url = "http://gazette.test/a";
    CHECK(doc_id_for_url(url) == "d" + hash_hex(fnv1a64(url)));
    CHECK(doc_id_for_url(url).size() == 17);
    CHECK(doc_id_for_url(url) == doc_id_for_url(url));
    CHECK(doc_id_for_url(url) != doc_id_for_url("http://gazette.test/b"));
}

TEST_CASE("search deduplicates canonical urls and keeps hit ranks") {
    int calls = 0;
    gateway::SearchTransport transport = [&](const gateway::SearchRequest& req) {
        ++calls;
        CHECK(req.max_results == 3);
        gateway::SearchResponse resp;
        resp.hits = {{"http://Example.COM/story#top", "One", 1},
                     {"javascript:alert(1)", "Bad", 2},
                     {"http://example.com/story", "Dup", 3},
                     {"https://news.test/item/", "Two", 4},
                     {"https://news.test/item", "Dup2", 5},
                     {"https://other.test", "Three", 6},
                     {"http://never.test/reached", "Four", 7}};
        return resp;
    };
    gateway::Gateway gw(gateway::Mode::live, "", nullptr, transport);

    auto refs = search(gw, "calder bay ruling", 3);
    CHECK(calls == 1);
    REQUIRE(refs.size() == 3);
    CHECK(refs[0].url == "http://Example.COM/story#top");
    CHECK(refs[0].title == "One");
    CHECK(refs[0].rank == 1);
    CHECK(refs[1].url == "https://news.test/item/");
    CHECK(refs[1].rank == 4);
    CHECK(refs[2].url == "https://other.test");
    CHECK(refs[2].rank == 6);

    CHECK_THROWS_AS((void)search(gw, "   ", 3), PipelineError);
    CHECK_THROWS_AS((void)search(gw, "ok", 0), PipelineError);
    CHECK(calls == 1);
}

TEST_CASE("page store records fetches and replays them without a transport") {
    iab_test::TempDir dir("iab_pages");
    const std::string ok_url = "http://a.test/ok";
    const std::string boom_url = "http://a.test/boom";
    const std::string body = "<p>hello from the fixture page</p>";

    int fetches = 0;
    FetchTransport fetch = [&](const std::string& url) -> FetchResult {
        ++fetches;
        if (url == boom_url) throw gateway::TransportError("connection refused");
        return FetchResult{200, "text/html; charset=utf-8", body, ""};
    };

    {
        PageStore store(gateway::Mode::record, dir.path(), fetch);
        auto got = store.get(ok_url);
        REQUIRE(got.has_value());
        CHECK(got->status == 200);
        CHECK(got->body == body);
        CHECK(!got->retrieved_at.empty());
        CHECK(store.live_fetches() == 1);

        CHECK(store.get(ok_url)->body == body); // second read comes from the index
        CHECK(store.live_fetches() == 1);
        CHECK(fetches == 1);

        CHECK(!store.get(boom_url).has_value());
        CHECK(store.live_fetches() == 2);
    }

    CHECK(std::filesystem::exists(dir.path() / "pages_index.json"));
    std::string body_file = hash_hex(fnv1a64(ok_url)) + ".body";
    CHECK(read_file(dir.path() / body_file) == body);
    json index = load_json_file(dir.path() / "pages_index.json");
    CHECK(index.at(ok_url).at("status") == 200);
    CHECK(index.at(boom_url).at("status") == 0);
    CHECK(index.at(boom_url).at("file") == "");

    PageStore replayed(gateway::Mode::replay, dir.path());
    auto got = replayed.get(ok_url);
    REQUIRE(got.has_value());
    CHECK(got->body == body);
    CHECK(got->content_type == "text/html; charset=utf-8");
    CHECK(!replayed.get(boom_url).has_value());   // recorded failure
    CHECK(!replayed.get("http://a.test/unknown").has_value()); // fixture miss
    CHECK(replayed.live_fetches() == 0);
    CHECK(fetches == 2);
}

TEST_CASE("a store without a fetch transport cannot serve misses") {
    iab_test::TempDir dir("iab_pages_nofetch");
    PageStore store(gateway::Mode::record, dir.path());
    CHECK(!store.get("http://a.test/x").has_value());
    CHECK(store.live_fetches() == 0);
}

TEST_CASE("fetch_and_extract labels every skip") {
    iab_test::TempDir dir("iab_extract");
    const std::string para =
        "The harbor board confirmed the schedule on Monday and residents expect "
        "a formal response before the end of the month.";
    FetchTransport fetch = [&](const std::string& url) -> FetchResult {
        if (url == "http://site.test/fail") throw gateway::TransportError("down");
        if (url == "http://site.test/404") return {404, "text/html", "nope", ""};
        if (url == "http://site.test/img") return {200, "image/png", "\x89PNG", ""};
        if (url == "http://site.test/short") return {200, "text/html", "<p>tiny</p>", ""};
        if (url == "http://site.test/plain")
            return {200, "text/plain; charset=utf-8", para + " " + para, ""};
        return {200, "text/html",
                "<html><head><title>Skip</title></head><body><nav>Site Nav | About</nav>"
                "<p>" + para + "</p><script>var hidden = '<p>js</p>';</script>"
                "<footer>contact us</footer></body></html>", ""};
    };
    PageStore store(gateway::Mode::record, dir.path(), fetch);

    auto expect_skip = [&](const std::string& url, const std::string& reason) {
        DocumentRef ref;
        ref.url = url;
        auto outcome = fetch_and_extract(ref, store, 50);
        CHECK(!outcome.doc.has_value());
        CHECK(outcome.skip_reason == reason);
    };
    expect_skip("http://site.test/fail", "fetch_failed");
    expect_skip("http://site.test/404", "http_error");
    expect_skip("http://site.test/img", "non_html");
    expect_skip("http://site.test/short", "too_short");

    DocumentRef good;
    good.url = "http://site.test/good";
    good.title = "Good";
    good.rank = 2;
    auto outcome = fetch_and_extract(good, store, 50);
    REQUIRE(outcome.doc.has_value());
    CHECK(outcome.skip_reason.empty());
    CHECK(outcome.doc->doc_id == doc_id_for_url(good.url));
    CHECK(outcome.doc->ref.rank == 2);
    CHECK(!outcome.doc->ref.retrieved_at.empty());
    CHECK(outcome.doc->text.find(para) != std::string::npos);
    CHECK(outcome.doc->text.find("Site Nav") == std::string::npos);
    CHECK(outcome.doc->text.find("hidden") == std::string::npos);
    CHECK(outcome.doc->text.find("contact us") == std::string::npos);

    DocumentRef plain;
    plain.url = "http://site.test/plain";
    auto plain_outcome = fetch_and_extract(plain, store, 50);
    REQUIRE(plain_outcome.doc.has_value());
    CHECK(plain_outcome.doc->text == para + " " + para);
}

TEST_CASE("main-text extraction keeps paragraphs and drops boilerplate") {
    std::string html =
        "<html><head><title>T</title><style>b{color:red}</style></head><body>\n"
        "<nav>Home | About</nav>\n"
        "<p>First paragraph with &amp; entity.</p>\n"
        "<script>var x = \"<p>not text</p>\";</script>\n"
        "<p>Second   paragraph.</p>\n"
        "<footer>copyright</footer>\n"
        "</body></html>";
    CHECK(extract_main_text(html) == "First paragraph with & entity.\n\nSecond paragraph.");
    CHECK(extract_main_text("<p></p>").empty());
}

TEST_CASE("sentence spans tile the text exactly") {
    SUBCASE("simple terminators") {
        std::string text = "One. Two! Three?";
        auto spans = sentence_spans(text);
        REQUIRE(spans.size() == 3);
        CHECK(text.substr(spans[0].first, spans[0].second - spans[0].first) == "One. ");
        CHECK(text.substr(spans[1].first, spans[1].second - spans[1].first) == "Two! ");
        CHECK(text.substr(spans[2].first, spans[2].second - spans[2].first) == "Three?");
    }

    SUBCASE("no break before a lowercase continuation") {
        CHECK(sentence_spans("The ruling cites the code e.g. the annex itself.").size() == 1);
    }

    SUBCASE("closing quotes stay with their sentence") {
        std::string text = "He said \"Stop.\" Then he left.";
        auto spans = sentence_spans(text);
        REQUIRE(spans.size() == 2);
        CHECK(text.substr(spans[0].first, spans[0].second - spans[0].first) ==
              "He said \"Stop.\" ");
    }

    SUBCASE("paragraph gaps split even without punctuation") {
        std::string text = "alpha beta\n\ngamma delta";
        auto spans = sentence_spans(text);
        REQUIRE(spans.size() == 2);
        CHECK(spans[0] == std::pair<size_t, size_t>{0, 12});
        CHECK(spans[1] == std::pair<size_t, size_t>{12, text.size()});
    }

    SUBCASE("spans partition arbitrary text") {
        std::string text =
            "Dr. Mercer filed the brief. The board met at 9 a.m. sharp.\n\n"
            "\"We expected this,\" she said. (The vote was 4-1.) Next week brings "
            "the appeal! Will it succeed? Nobody knows yet. ";
        auto spans = sentence_spans(text);
        REQUIRE(!spans.empty());
        CHECK(spans.front().first == 0);
        CHECK(spans.back().second == text.size());
        for (size_t i = 1; i < spans.size(); ++i) {
            CHECK(spans[i].first == spans[i - 1].second);
            CHECK(spans[i].first < spans[i].second);
        }
        CHECK(sentence_spans("").empty());
    }
}

TEST_CASE("chunking is sentence aligned with bounded overlap") {
    SUBCASE("short documents become a single unit") {
        Document doc = make_doc("Short and sweet.");
        auto units = chunk(doc, 200, 40);
        REQUIRE(units.size() == 1);
        CHECK(units[0].unit_id == doc.doc_id + ":0");
        CHECK(units[0].text == doc.text);
        CHECK(units[0].span_begin == 0);
        CHECK(units[0].span_end == doc.text.size());
    }

    SUBCASE("empty documents produce no units") {
        CHECK(chunk(make_doc(""), 200, 40).empty());
    }

    SUBCASE("target must exceed overlap") {
        CHECK_THROWS_AS((void)chunk(make_doc("Some text."), 40, 40), PipelineError);
    }

    SUBCASE("long documents reassemble byte for byte") {
        std::string text;
        for (int i = 0; i < 40; ++i) {
            text += "Sentence number " + std::to_string(i) +
                    " carries a little filler so lengths vary slightly. ";
        }
        Document doc = make_doc(text);
        const size_t target = 200, overlap = 60;
        auto units = chunk(doc, target, overlap);
        REQUIRE(units.size() > 3);

        CHECK(units.front().span_begin == 0);
        CHECK(units.back().span_end == text.size());
        std::string rebuilt = units[0].text;
        for (size_t i = 0; i < units.size(); ++i) {
            CHECK(units[i].unit_id == doc.doc_id + ":" + std::to_string(i));
            CHECK(units[i].text ==
                  text.substr(units[i].span_begin, units[i].span_end - units[i].span_begin));
            if (i == 0) continue;
            CHECK(units[i].span_begin > units[i - 1].span_begin);
            CHECK(units[i].span_begin <= units[i - 1].span_end);
            CHECK(units[i - 1].span_end - units[i].span_begin <= overlap);
            rebuilt += units[i].text.substr(units[i - 1].span_end - units[i].span_begin);
        }
        CHECK(rebuilt == text);
    }
}

TEST_CASE("documents and units round trip through json") {
    Document doc = make_doc("Body text. More body text.");
    doc.ref.rank = 3;
    doc.ref.retrieved_at = "2025-06-02T08:00:00Z";
    Document doc2 = document_from_json(document_to_json(doc));
    CHECK(doc2.doc_id == doc.doc_id);
    CHECK(doc2.ref.url == doc.ref.url);
    CHECK(doc2.ref.title == doc.ref.title);
    CHECK(doc2.ref.rank == 3);
    CHECK(doc2.ref.retrieved_at == doc.ref.retrieved_at);
    CHECK(doc2.text == doc.text);

    TextUnit unit;
    unit.unit_id = doc.doc_id + ":4";
    unit.doc_id = doc.doc_id;
    unit.text = "More body text.";
    unit.span_begin = 11;
    unit.span_end = 26;
    TextUnit unit2 = unit_from_json(unit_to_json(unit));
    CHECK(unit2.unit_id == unit.unit_id);
    CHECK(unit2.doc_id == unit.doc_id);
    CHECK(unit2.text == unit.text);
    CHECK(unit2.span_begin == 11);
    CHECK(unit2.span_end == 26);
}
