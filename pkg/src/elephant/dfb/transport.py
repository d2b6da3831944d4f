"""Message transports: an in-process queue pair for tests and single-machine
runs, and a TCP variant with the same framing and semantics."""
from __future__ import annotations

import queue
import socket
import struct
import threading

from . import protocol


class TransportClosed(ConnectionError):
    pass


_SENTINEL = object()


class Transport:
    """send_msg/recv_msg move one framed protocol message at a time."""

    def send_msg(self, msg):
        self.send(protocol.encode(msg))

    def recv_msg(self, timeout: float | None = None):
        return protocol.decode(self.recv(timeout))

    def send(self, data: bytes):
        raise NotImplementedError

    def recv(self, timeout: float | None = None) -> bytes:
        raise NotImplementedError

    def close(self):
        raise NotImplementedError


class InProcessTransport(Transport):
    def __init__(self, inbox: queue.Queue, outbox: queue.Queue):
        self._inbox = inbox
        self._outbox = outbox
        self._closed = False

    def send(self, data: bytes):
        if self._closed:
            raise TransportClosed("transport closed")
        self._outbox.put(data[4:])  # strip the u32 length prefix; queues frame

    def recv(self, timeout: float | None = None) -> bytes:
        if self._closed:
            raise TransportClosed("transport closed")
        try:
            item = self._inbox.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError("recv timed out")
        if item is _SENTINEL:
            self._closed = True
            raise TransportClosed("peer closed")
        return item

    def close(self):
        if not self._closed:
            self._closed = True
            self._outbox.put(_SENTINEL)


def inprocess_pair() -> tuple[InProcessTransport, InProcessTransport]:
    a_to_b: queue.Queue = queue.Queue()
    b_to_a: queue.Queue = queue.Queue()
    return (InProcessTransport(b_to_a, a_to_b),
            InProcessTransport(a_to_b, b_to_a))


class TcpTransport(Transport):
    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._send_lock = threading.Lock()
        self._closed = False

    def send(self, data: bytes):
        if self._closed:
            raise TransportClosed("transport closed")
        try:
            with self._send_lock:
                self._sock.sendall(data)
        except OSError as e:
            self._closed = True
            raise TransportClosed(str(e))

    def _read_exact(self, n: int, timeout: float | None) -> bytes:
        self._sock.settimeout(timeout)
        buf = bytearray()
        while len(buf) < n:
            try:
                chunk = self._sock.recv(n - len(buf))
            except socket.timeout:
                raise TimeoutError("recv timed out")
            except OSError as e:
                self._closed = True
                raise TransportClosed(str(e))
            if not chunk:
                self._closed = True
                raise TransportClosed("peer closed")
            buf.extend(chunk)
        return bytes(buf)

    def recv(self, timeout: float | None = None) -> bytes:
        if self._closed:
            raise TransportClosed("transport closed")
        (length,) = struct.unpack("<I", self._read_exact(4, timeout))
        return self._read_exact(length, timeout)

    def close(self):
        self._closed = True
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def connect_tcp(host: str, port: int, timeout: float = 10.0) -> TcpTransport:
    sock = socket.create_connection((host, port), timeout=timeout)
    sock.settimeout(None)
    return TcpTransport(sock)


class TcpListener:
    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen()

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()[:2]

    def accept(self, timeout: float | None = None) -> TcpTransport:
        self._sock.settimeout(timeout)
        try:
            conn, _ = self._sock.accept()
        except socket.timeout:
            raise TimeoutError("accept timed out")
        conn.settimeout(None)
        return TcpTransport(conn)

    def close(self):
        self._sock.close()
