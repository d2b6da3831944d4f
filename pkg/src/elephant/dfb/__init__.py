from .head import AllWorkersLost, FrameRecord, Head, HeadResult, run_head
from .protocol import (CameraState, CameraUpdate, FrameComplete, Hello,
                       ProtocolError, RenderFrame, SceneHashMismatch,
                       SetConfig, SetScene, Shutdown, TileOwnership,
                       TileResult, ZeroWorkers, assign_tiles, decode, encode,
                       scene_hash)
from .transport import (InProcessTransport, TcpListener, TcpTransport,
                        Transport, TransportClosed, connect_tcp,
                        inprocess_pair)
from .serve import (FORMAT_PNG, FORMAT_RAW, BindFailure,
                    MalformedClientMessage, ViewerSession, pack_viewer_frame,
                    serve, serve_session, unpack_viewer_frame)
from .worker import WorkerState, mode_from_index, mode_to_index, run_worker

__all__ = ["AllWorkersLost", "FrameRecord", "Head", "HeadResult", "run_head",
           "CameraState", "CameraUpdate", "FrameComplete", "Hello",
           "ProtocolError", "RenderFrame", "SceneHashMismatch", "SetConfig",
           "SetScene", "Shutdown", "TileOwnership", "TileResult",
           "ZeroWorkers", "assign_tiles", "decode", "encode", "scene_hash",
           "InProcessTransport", "TcpListener", "TcpTransport", "Transport",
           "TransportClosed", "connect_tcp", "inprocess_pair", "WorkerState",
           "run_worker", "mode_from_index", "mode_to_index", "FORMAT_PNG",
           "FORMAT_RAW", "BindFailure", "MalformedClientMessage",
           "ViewerSession", "pack_viewer_frame", "serve", "serve_session",
           "unpack_viewer_frame"]
