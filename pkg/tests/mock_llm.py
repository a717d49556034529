"""Local chat-completion mock: serves a scripted sequence of responses and
records every request it receives."""

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


def chat_body(content):
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


class MockLlmServer:
    """Context manager running a scripted HTTP endpoint on an OS-chosen port.

    ``script`` is a list of (status, body_dict_or_None, delay_seconds)
    entries consumed one per request; the last entry repeats once the script
    is exhausted.
    """

    def __init__(self, script):
        self.script = list(script)
        self.requests = []
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                with outer._lock:
                    outer.requests.append(
                        {
                            "path": self.path,
                            "headers": dict(self.headers),
                            "body": json.loads(raw) if raw else None,
                        }
                    )
                    idx = min(len(outer.requests) - 1, len(outer.script) - 1)
                status, body, delay = outer.script[idx]
                if delay:
                    time.sleep(delay)
                payload = json.dumps(body or {}).encode()
                try:
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    self.wfile.write(payload)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client timed out first; that's the point

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self):
        host, port = self._server.server_address
        return f"http://{host}:{port}/chat/completions"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
        return False
