#!/usr/bin/env python3
"""Synthetic CDX generator plus a straightforward sequential filter oracle.

Plants a fixed composition into 1,000 records, shuffles them with a fixed
seed, writes the CDX file, then filters it rule by rule with plain Python
and writes the expected surviving records and the expected observation log.

usage: cdx_synth.py <out.cdx> <expected_survivors.tsv> <expected_observations.tsv>
"""
import base64
import hashlib
import random
import sys
from urllib.parse import urlsplit

SEED = 20100212
rng = random.Random(SEED)

HOSTS = ["vancouver2010.com", "www.lefigaro.fr", "canadacode.vancouver2010.com",
         "www.lemonde.fr", "monlibe.liberation.fr", "www.teamgb.com", "ledauphine.com"]
IMAGE_MIMES = ["image/jpeg", "image/png", "image/gif", "image/x-icon"]
SCRIPT_CSS = ["text/css", "application/javascript", "text/javascript", "application/x-javascript"]
BINARY = ["application/pdf", "application/octet-stream", "video/mp4", "application/x-shockwave-flash"]
TEXTUAL = ["text/html", "text/html", "text/html", "text/plain", "text/xml"]
IMG_EXT = ["jpg", "JPEG", "png", "gif", "bmp", "ico", "tif", "tiff", "css", "js", "swf"]

_counter = 0


def fresh_digest() -> str:
    global _counter
    _counter += 1
    return base64.b32encode(hashlib.sha1(f"content-{_counter}".encode()).digest()).decode()


def ts() -> str:
    y, mo = rng.choice([(2009, 11), (2009, 12), (2010, 1), (2010, 2), (2010, 3)])
    d = rng.randint(1, 28)
    return f"{y}{mo:02d}{d:02d}{rng.randint(0, 23):02d}{rng.randint(0, 59):02d}{rng.randint(0, 59):02d}"


def surt(uri: str) -> str:
    p = urlsplit(uri)
    labels = p.hostname.split(".")
    if labels[0] == "www":
        labels = labels[1:]
    return ",".join(reversed(labels)) + ")" + (p.path or "/") + ("?" + p.query if p.query else "")


def page_uri(i: int, ext: str = "html") -> str:
    return f"http://{rng.choice(HOSTS)}/section{i % 17}/page{i}.{ext}"


def record(uri, mime, status, digest, timestamp=None):
    return {"uri": uri, "mime": mime, "status": status, "digest": digest, "ts": timestamp or ts()}


def build():
    recs = []
    i = 0
    # 250 non-200 captures across every mimetype family
    for _ in range(250):
        i += 1
        status = rng.choice(["301", "302", "404", "500", "-", "206", "204"])
        recs.append(record(page_uri(i), rng.choice(TEXTUAL + IMAGE_MIMES), status, fresh_digest()))
    # 150 images served with 200
    for _ in range(150):
        i += 1
        recs.append(record(page_uri(i, rng.choice(["jpg", "png", "gif", "html"])),
                           rng.choice(IMAGE_MIMES), "200", fresh_digest()))
    # 40 scripts and stylesheets
    for _ in range(40):
        i += 1
        recs.append(record(page_uri(i, rng.choice(["js", "css", "php"])), rng.choice(SCRIPT_CSS), "200", fresh_digest()))
    # 30 other non-textual payloads
    for _ in range(30):
        i += 1
        recs.append(record(page_uri(i, "bin"), rng.choice(BINARY), "200", fresh_digest()))
    # 100 text/html captures whose path ends with a non-textual extension
    for _ in range(100):
        i += 1
        ext = rng.choice(IMG_EXT)
        uri = page_uri(i, ext)
        suffix = rng.choice(["", "?w=100", "#top", "?a=b&c=d#f"])
        recs.append(record(uri + suffix, "text/html", "200", fresh_digest()))
    # 430 textual survivors-to-be: 305 unique contents, 120 duplicates, 5 without digest
    uniques = []
    for _ in range(305):
        i += 1
        r = record(page_uri(i), rng.choice(TEXTUAL), "200", fresh_digest())
        uniques.append(r)
        recs.append(r)
    for n in range(120):
        i += 1
        src = rng.choice(uniques[:60])
        # some duplicates share the exact timestamp with their source
        timestamp = src["ts"] if n % 15 == 0 else None
        uri = src["uri"] if n % 2 == 0 else page_uri(i)
        recs.append(record(uri, rng.choice(TEXTUAL), "200", src["digest"], timestamp))
    for _ in range(5):
        i += 1
        recs.append(record(page_uri(i), "text/html", "200", "-"))
    rng.shuffle(recs)
    for n, r in enumerate(recs):
        r["file"] = f"SYNTH-{n % 7:06d}.warc.gz"
        r["offset"] = str(1000 * n + rng.randint(0, 999))
        r["length"] = str(rng.randint(200, 90000))
        r["key"] = surt(r["uri"])
    return recs


def path_extension(uri: str) -> str:
    path = uri.split("#", 1)[0].split("?", 1)[0]
    path = path.split("://", 1)[-1]
    path = path[path.find("/"):] if "/" in path else "/"
    last = path.rsplit("/", 1)[-1]
    return last.rsplit(".", 1)[-1].lower() if "." in last else ""


def oracle(recs):
    excluded_mimes = ("image/", "text/css", "application/javascript", "text/javascript", "application/x-javascript")
    image_exts = {"jpg", "jpeg", "png", "gif", "bmp", "ico", "tif", "tiff", "css", "js", "swf"}
    step1 = [r for r in recs if r["status"] == "200"]
    step2 = [r for r in step1 if not r["mime"].lower().startswith(excluded_mimes)]
    step3 = [r for r in step2 if r["mime"].lower().startswith("text/")]
    step4 = [r for r in step3 if path_extension(r["uri"]) not in image_exts]
    best = {}
    for pos, r in enumerate(step4):
        if r["digest"] == "-":
            continue
        cur = best.get(r["digest"])
        if cur is None or r["ts"] < step4[cur]["ts"]:
            best[r["digest"]] = pos
    step5 = [r for pos, r in enumerate(step4) if r["digest"] == "-" or best[r["digest"]] == pos]
    return step5, step1


def main():
    cdx_path, surv_path, obs_path = sys.argv[1:4]
    recs = build()
    with open(cdx_path, "w") as f:
        f.write(" CDX N b a m s k r M S V g\n")
        for r in recs:
            f.write(" ".join([r["key"], r["ts"], r["uri"], r["mime"], r["status"], r["digest"],
                              "-", "-", r["length"], r["offset"], r["file"]]) + "\n")
    survivors, observations = oracle(recs)
    with open(surv_path, "w") as f:
        for r in survivors:
            f.write("\t".join([r["key"], r["ts"], r["uri"], r["digest"], r["offset"], r["file"]]) + "\n")
    with open(obs_path, "w") as f:
        for r in observations:
            f.write("\t".join([r["key"], r["ts"], r["digest"], r["uri"]]) + "\n")
    print(f"records={len(recs)} survivors={len(survivors)} observations={len(observations)}")


if __name__ == "__main__":
    main()
