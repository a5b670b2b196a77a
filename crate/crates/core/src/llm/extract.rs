use thiserror::Error;

use crate::pcl::lexer::{tokenize, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("the response contains no program")]
pub struct NoCodeFound;

/// Pulls the program out of a model response: the last fenced code block
/// if there is one, otherwise the longest run of trailing lines that lexes.
pub fn extract_code(response: &str) -> Result<String, NoCodeFound> {
    if let Some(block) = last_fenced_block(response) {
        return if block.trim().is_empty() { Err(NoCodeFound) } else { Ok(block) };
    }
    trailing_program(response).ok_or(NoCodeFound)
}

fn last_fenced_block(text: &str) -> Option<String> {
    let fences: Vec<usize> = text.match_indices("```").map(|(i, _)| i).collect();
    if fences.is_empty() {
        return None;
    }
    // An unpaired last fence opens a block that runs to the end.
    let (open, close) = if fences.len().is_multiple_of(2) {
        (fences[fences.len() - 2], fences[fences.len() - 1])
    } else {
        (fences[fences.len() - 1], text.len())
    };
    let body = &text[open + 3..close];
    let body = match body.split_once('\n') {
        Some((info, rest)) if info.trim().chars().all(|c| c.is_alphanumeric() || c == '-' || c == '_') => rest,
        _ => body,
    };
    Some(body.trim().to_string())
}

fn starts_statement(line: &str) -> bool {
    let t = line.trim_start();
    if t.starts_with('#') {
        return true;
    }
    match tokenize(line).as_deref() {
        Ok([first, second, ..]) => matches!(
            (&first.kind, &second.kind),
            (TokenKind::Ident(_), TokenKind::Assign) | (TokenKind::Ident(_), TokenKind::LParen)
        ) && (second.kind == TokenKind::Assign
            || matches!(&first.kind, TokenKind::Ident(n) if n == "final")),
        _ => false,
    }
}

fn trailing_program(text: &str) -> Option<String> {
    let lines: Vec<&str> = text.lines().collect();
    let start = (0..lines.len()).find(|&i| tokenize(&lines[i..].join("\n")).is_ok())?;
    let region = &lines[start..];
    let first = region.iter().position(|l| starts_statement(l))?;
    let program = region[first..].join("\n");
    let tokens = tokenize(&program).ok()?;
    let has_statement = tokens.iter().any(|t| t.kind == TokenKind::Assign)
        || tokens.iter().any(|t| matches!(&t.kind, TokenKind::Ident(n) if n == "final"));
    has_statement.then(|| program.trim().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_block() {
        let r = "Here is the model: ```\na = activity(\"x\")\nfinal(a)\n```";
        assert_eq!(extract_code(r).unwrap(), "a = activity(\"x\")\nfinal(a)");
        let r = "Here is the model:\n```pcl\na = activity(\"x\")\nfinal(a)\n```\nDone!";
        assert_eq!(extract_code(r).unwrap(), "a = activity(\"x\")\nfinal(a)");
    }

    #[test]
    fn last_block_wins() {
        let r = "```\nfirst = silent()\nfinal(first)\n```\ntext\n```\nsecond = silent()\nfinal(second)\n```";
        assert_eq!(extract_code(r).unwrap(), "second = silent()\nfinal(second)");
    }

    #[test]
    fn unfenced_trailing_code() {
        let r = "I modeled it as follows:\n\na = activity(\"x\")\nfinal(a)\n";
        assert_eq!(extract_code(r).unwrap(), "a = activity(\"x\")\nfinal(a)");
    }

    #[test]
    fn prose_only() {
        assert_eq!(extract_code("I cannot model this process."), Err(NoCodeFound));
        assert_eq!(extract_code("Sure thing"), Err(NoCodeFound));
        assert_eq!(extract_code(""), Err(NoCodeFound));
        assert_eq!(extract_code("```\n\n```"), Err(NoCodeFound));
        assert_eq!(extract_code("```pcl\n```"), Err(NoCodeFound));
    }
}
