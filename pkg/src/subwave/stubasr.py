"""Local stand-in for the speech-recognition endpoint.

Implements the same ``POST /v1/speech:recognize`` contract the HTTP
transcriber speaks, so tests (and offline experiments) can run without the
real service. Responses are scriptable: a fixed transcript, a queue of
failure statuses to emit first, or an empty result list.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class StubSpeechServer:
    """Scriptable recognize endpoint on localhost.

    Args:
        transcript: transcript returned for every successful request.
        fail_statuses: statuses to emit, one per request, before succeeding.
        empty_results: answer with no hypotheses instead of a transcript.
    """

    def __init__(self, transcript: str = "", fail_statuses=(), empty_results: bool = False, port: int = 0):
        self.transcript = transcript
        self.fail_statuses = list(fail_statuses)
        self.empty_results = empty_results
        self.raw_body: bytes | None = None  # overrides the JSON payload when set
        self.requests: list[dict] = []
        self._lock = threading.Lock()

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                with stub._lock:
                    try:
                        stub.requests.append(json.loads(raw))
                    except ValueError:
                        stub.requests.append({"_raw": len(raw)})
                    failure = stub.fail_statuses.pop(0) if stub.fail_statuses else None
                if self.path != "/v1/speech:recognize":
                    self.send_response(404)
                    self.end_headers()
                    return
                if failure is not None:
                    self.send_response(failure)
                    self.end_headers()
                    return
                if stub.raw_body is not None:
                    body = stub.raw_body
                elif stub.empty_results:
                    body = json.dumps({"results": []}).encode()
                else:
                    body = json.dumps(
                        {"results": [{"alternatives": [{"transcript": stub.transcript}]}]}
                    ).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def start(self) -> "StubSpeechServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Run a local stub speech endpoint.")
    parser.add_argument("--port", type=int, default=8089)
    parser.add_argument("--transcript", default="hello world")
    args = parser.parse_args(argv)
    server = StubSpeechServer(transcript=args.transcript, port=args.port)
    print(f"stub speech endpoint at {server.url} (transcript: {args.transcript!r})")
    try:
        server.start()._thread.join()
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
