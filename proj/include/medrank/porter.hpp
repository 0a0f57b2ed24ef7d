#pragma once

#include <string>
#include <string_view>

namespace medrank {

/// Porter's suffix-stripping stemmer, following the reference C release
/// (including its "bli"->"ble" and "logi"->"log" step-2 rules). Input is
/// expected in lower case; words of two letters or fewer are returned as is.
class PorterStemmer {
public:
    std::string stem(std::string_view word) const
    {
        State s{std::string(word), static_cast<int>(word.size()) - 1, 0};
        if (s.k <= 1) return s.b;
        s.step1ab();
        if (s.k > 0) {
            s.step1c();
            s.step2();
            s.step3();
            s.step4();
            s.step5();
        }
        s.b.resize(static_cast<std::size_t>(s.k + 1));
        return s.b;
    }

private:
    struct State {
        std::string b;
        int k;  // offset of the last character of the current stem
        int j;  // general offset into the word, set by ends()

        bool cons(int i) const
        {
            switch (b[static_cast<std::size_t>(i)]) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !cons(i - 1);
            default:
                return true;
            }
        }

        // Number of consonant-vowel sequences in b[0..j]:
        // [C](VC)^m[V] gives m.
        int m() const
        {
            int n = 0;
            int i = 0;
            for (;;) {
                if (i > j) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
            for (;;) {
                for (;;) {
                    if (i > j) return n;
                    if (cons(i)) break;
                    ++i;
                }
                ++i;
                ++n;
                for (;;) {
                    if (i > j) return n;
                    if (!cons(i)) break;
                    ++i;
                }
                ++i;
            }
        }

        bool vowel_in_stem() const
        {
            for (int i = 0; i <= j; ++i)
                if (!cons(i)) return true;
            return false;
        }

        bool double_consonant(int i) const
        {
            if (i < 1) return false;
            if (b[static_cast<std::size_t>(i)] != b[static_cast<std::size_t>(i - 1)]) return false;
            return cons(i);
        }

        // consonant-vowel-consonant ending at i, where the final consonant
        // is not w, x or y
        bool cvc(int i) const
        {
            if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
            char ch = b[static_cast<std::size_t>(i)];
            return ch != 'w' && ch != 'x' && ch != 'y';
        }

        bool ends(std::string_view s)
        {
            int len = static_cast<int>(s.size());
            if (len > k + 1) return false;
            if (std::string_view(b).substr(static_cast<std::size_t>(k - len + 1), s.size()) != s) return false;
            j = k - len;
            return true;
        }

        void set_to(std::string_view s)
        {
            b.replace(static_cast<std::size_t>(j + 1), static_cast<std::size_t>(k - j), s);
            k = j + static_cast<int>(s.size());
            b.resize(static_cast<std::size_t>(k + 1));
        }

        void replace_if_measured(std::string_view s)
        {
            if (m() > 0) set_to(s);
        }

        char at(int i) const { return b[static_cast<std::size_t>(i)]; }

        // plurals and -ed / -ing
        void step1ab()
        {
            if (at(k) == 's') {
                if (ends("sses")) k -= 2;
                else if (ends("ies")) set_to("i");
                else if (at(k - 1) != 's') --k;
            }
            if (ends("eed")) {
                if (m() > 0) --k;
            } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
                k = j;
                if (ends("at")) set_to("ate");
                else if (ends("bl")) set_to("ble");
                else if (ends("iz")) set_to("ize");
                else if (double_consonant(k)) {
                    --k;
                    char ch = at(k);
                    if (ch == 'l' || ch == 's' || ch == 'z') ++k;
                } else if (m() == 1 && cvc(k)) {
                    set_to("e");
                }
            }
        }

        void step1c()
        {
            if (ends("y") && vowel_in_stem()) b[static_cast<std::size_t>(k)] = 'i';
        }

        // double suffixes to single ones
        void step2()
        {
            struct Rule {
                std::string_view from, to;
            };
            static constexpr Rule rules[] = {
                {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"}, {"izer", "ize"},
                {"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"},
                {"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}, {"alism", "al"}, {"iveness", "ive"},
                {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"},
                {"logi", "log"},
            };
            apply_first(rules, at(k - 1), 2);
        }

        void step3()
        {
            struct Rule {
                std::string_view from, to;
            };
            static constexpr Rule rules[] = {
                {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"}, {"ical", "ic"}, {"ful", ""}, {"ness", ""},
            };
            apply_first(rules, at(k), 1);
        }

        // The reference switches on one character of the suffix before trying
        // its candidates; the first matching candidate in that group wins.
        template <typename Rules>
        void apply_first(const Rules& rules, char key, std::size_t key_from_end)
        {
            for (const auto& r : rules) {
                if (r.from[r.from.size() - key_from_end] != key) continue;
                if (ends(r.from)) {
                    replace_if_measured(r.to);
                    return;
                }
            }
        }

        void step4()
        {
            static constexpr std::string_view suffixes[] = {
                "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent",
                "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
            };
            char key = at(k - 1);
            bool matched = false;
            for (auto s : suffixes) {
                if (s[s.size() - 2] != key) continue;
                if (!ends(s)) continue;
                if (s == "ion" && !(j >= 0 && (at(j) == 's' || at(j) == 't'))) continue;
                matched = true;
                break;
            }
            if (!matched) return;
            if (m() > 1) k = j;
        }

        void step5()
        {
            j = k;
            if (at(k) == 'e') {
                int a = m();
                if (a > 1 || (a == 1 && !cvc(k - 1))) --k;
            }
            if (at(k) == 'l' && double_consonant(k) && m() > 1) --k;
        }
    };
};

}  // namespace medrank
