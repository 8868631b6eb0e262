//! Rewriting the build-time placeholder to the real install prefix.

/// Replaces every occurrence of `placeholder` with `prefix`.
pub fn relocate_text(data: &[u8], placeholder: &[u8], prefix: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    let mut rest = data;
    while let Some(i) = find(rest, placeholder) {
        out.extend_from_slice(&rest[..i]);
        out.extend_from_slice(prefix);
        rest = &rest[i + placeholder.len()..];
    }
    out.extend_from_slice(rest);
    out
}

/// Length-preserving relocation for binaries. Each NUL-terminated string
/// containing the placeholder is rewritten with the placeholder replaced
/// and then padded with NUL bytes back to its original length, so offsets
/// of everything outside the string are unchanged.
///
/// Returns `None` when the prefix is longer than the placeholder.
pub fn relocate_binary(data: &[u8], placeholder: &[u8], prefix: &[u8]) -> Option<Vec<u8>> {
    if prefix.len() > placeholder.len() {
        return None;
    }
    let mut out = data.to_vec();
    let mut pos = 0;
    while let Some(i) = find(&data[pos..], placeholder) {
        let start = pos + i;
        let end = data[start..]
            .iter()
            .position(|&b| b == 0)
            .map_or(data.len(), |n| start + n);
        let rewritten = relocate_text(&data[start..end], placeholder, prefix);
        out[start..start + rewritten.len()].copy_from_slice(&rewritten);
        out[start + rewritten.len()..end].fill(0);
        pos = end;
    }
    Some(out)
}

/// Byte ranges that relocation may touch: from each placeholder occurrence
/// to the end of its NUL-terminated string.
pub fn binary_sites(data: &[u8], placeholder: &[u8]) -> Vec<std::ops::Range<usize>> {
    let mut sites = Vec::new();
    let mut pos = 0;
    while let Some(i) = find(&data[pos..], placeholder) {
        let start = pos + i;
        let end = data[start..]
            .iter()
            .position(|&b| b == 0)
            .map_or(data.len(), |n| start + n);
        sites.push(start..end);
        pos = end;
    }
    sites
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || haystack.len() < needle.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}
