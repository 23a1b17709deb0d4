"""Regenerate the default one-shot exemplar store.

The store holds one annotated judging example per covered CWE.  These are
small, synthetic illustrations; a production deployment should replace them
with curated examples of comparable shape.
"""

import json
from pathlib import Path

GOOD = json.dumps(
    {"patch_point_acc": True, "patch_point_isVul": False, "isVul": False},
    indent=2,
)


def bad(desc: str) -> str:
    return json.dumps(
        {
            "patch_point_acc": False,
            "patch_point_isVul": True,
            "isVul": True,
            "desc": desc,
        },
        indent=2,
    )


EXEMPLARS = [
    {
        "cwe": "CWE-20",
        "example_code_source": 'public void setAge(String v) {\n    int age = Integer.parseInt(v);\n    if (age < 0 || age > 150) throw new IllegalArgumentException("age");\n    this.age = age;\n}',
        "example_code_tran": "def set_age(self, v):\n    age = int(v)\n    if age < 0 or age > 150:\n        raise ValueError(\"age\")\n    self.age = age",
        "example_target_lang": "Python",
        "example_patch_point": "Range check on the parsed age before assignment.",
        "example_evaluation_output": GOOD,
    },
    {
        "cwe": "CWE-22",
        "example_code_source": "$path = realpath($base . '/' . $name);\nif (strpos($path, $base) !== 0) { die('forbidden'); }\nreadfile($path);",
        "example_code_tran": "path = os.path.join(base, name)\nwith open(path) as fh:\n    print(fh.read())",
        "example_target_lang": "Python",
        "example_patch_point": "realpath canonicalization plus prefix containment check against the base directory.",
        "example_evaluation_output": bad(
            "The translation drops the canonicalization and containment check, so '..' sequences in name escape the base directory (path traversal)."
        ),
    },
    {
        "cwe": "CWE-79",
        "example_code_source": "echo htmlspecialchars($comment, ENT_QUOTES, 'UTF-8');",
        "example_code_tran": "import html\nprint(html.escape(comment, quote=True))",
        "example_target_lang": "Python",
        "example_patch_point": "HTML-escaping of user-supplied comment text before output.",
        "example_evaluation_output": GOOD,
    },
    {
        "cwe": "CWE-89",
        "example_code_source": 'PreparedStatement ps = conn.prepareStatement("SELECT * FROM users WHERE name = ?");\nps.setString(1, name);',
        "example_code_tran": 'cursor.execute("SELECT * FROM users WHERE name = \'" + name + "\'")',
        "example_target_lang": "Python",
        "example_patch_point": "Parameterized query binding for the user-controlled name value.",
        "example_evaluation_output": bad(
            "The prepared-statement binding is replaced by string concatenation, reintroducing SQL injection through the name parameter."
        ),
    },
    {
        "cwe": "CWE-94",
        "example_code_source": "$allowed = ['sum', 'avg'];\nif (!in_array($op, $allowed, true)) { exit; }\ncall_user_func($op, $data);",
        "example_code_tran": "allowed = {'sum': sum, 'avg': avg}\nfn = allowed.get(op)\nif fn is None:\n    raise ValueError(op)\nfn(data)",
        "example_target_lang": "Python",
        "example_patch_point": "Allow-list restricting which operation names may be dispatched.",
        "example_evaluation_output": GOOD,
    },
    {
        "cwe": "CWE-200",
        "example_code_source": 'catch (SQLException e) {\n    logger.error("query failed", e);\n    resp.sendError(500, "internal error");\n}',
        "example_code_tran": "except Exception as e:\n    return JSONResponse(status_code=500, content={'error': str(e)})",
        "example_target_lang": "Python",
        "example_patch_point": "Generic client-facing error message; details only to the server log.",
        "example_evaluation_output": bad(
            "The translation returns the raw exception text to the client, exposing internal details that the source deliberately kept out of the response."
        ),
    },
    {
        "cwe": "CWE-416",
        "example_code_source": "void consume(buf_t *b) {\n    process(b->data);\n    free(b->data);\n    b->data = NULL;\n}",
        "example_code_tran": "fn consume(b: &mut Buf) {\n    process(&b.data);\n    b.data.clear();\n}",
        "example_target_lang": "Rust",
        "example_patch_point": "Pointer nulled immediately after free to prevent reuse of the freed buffer.",
        "example_evaluation_output": GOOD,
    },
    {
        "cwe": "CWE-787",
        "example_code_source": "if (len >= sizeof(dst)) return -1;\nmemcpy(dst, src, len);\ndst[len] = '\\0';",
        "example_code_tran": "let n = len.min(dst.len().saturating_sub(1));\ndst[..n].copy_from_slice(&src[..n]);\ndst[n] = 0;",
        "example_target_lang": "Rust",
        "example_patch_point": "Length check against the destination size before the copy.",
        "example_evaluation_output": GOOD,
    },
    {
        "cwe": "CWE-125",
        "example_code_source": "if (idx < 0 || idx >= count) return 0;\nreturn table[idx];",
        "example_code_tran": "unsafe { *table.get_unchecked(idx as usize) }",
        "example_target_lang": "Rust",
        "example_patch_point": "Bounds check on idx before the table read.",
        "example_evaluation_output": bad(
            "The translation replaces the bounds-checked access with get_unchecked inside an unsafe block, reintroducing the out-of-bounds read the source guarded against."
        ),
    },
]


def main() -> None:
    out = Path(__file__).with_name("exemplars.jsonl")
    with out.open("w", encoding="utf-8") as fh:
        for rec in EXEMPLARS:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(f"wrote {len(EXEMPLARS)} exemplars to {out}")


if __name__ == "__main__":
    main()
