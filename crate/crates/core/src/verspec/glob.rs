/// Matches `text` against a pattern where `*` stands for any run of
/// characters (including none). No other metacharacters.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p = pattern.as_bytes();
    let t = text.as_bytes();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == b'*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == b'*')
}

#[cfg(test)]
mod tests {
    use super::glob_match;

    #[test]
    fn basic_patterns() {
        assert!(glob_match("*", ""));
        assert!(glob_match("*_cpython", "hffdb5ce_0_cpython"));
        assert!(glob_match("hffdb5ce*", "hffdb5ce_0_cpython"));
        assert!(glob_match("h*_0_*", "hffdb5ce_0_cpython"));
        assert!(!glob_match("h*_1_*", "hffdb5ce_0_cpython"));
        assert!(glob_match("abc", "abc"));
        assert!(!glob_match("abc", "abcd"));
        assert!(glob_match("a**c", "abbbc"));
    }
}
