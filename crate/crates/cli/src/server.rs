use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::thread;

use ocular_parallax::retinal_sim::{default_scene, Scene};
use tungstenite::{Message, WebSocket};

use crate::args::ServeArgs;
use crate::error::{CliError, CliResult};
use crate::protocol::Reply;
use crate::session::Session;

pub fn serve_cli(a: &ServeArgs) -> CliResult<()> {
    let (scene, asset_dir) = match &a.scene {
        Some(p) => (
            Scene::load(p)?,
            p.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        ),
        None => (default_scene(), PathBuf::from(".")),
    };
    let listener = TcpListener::bind((a.host.as_str(), a.port))
        .map_err(CliError::io(format!("binding {}:{}", a.host, a.port)))?;
    eprintln!("listening on ws://{}", listener.local_addr().map_err(CliError::io("local address"))?);
    serve(listener, scene, asset_dir)
}

/// Accepts connections forever, one thread and one [`Session`] per client.
pub fn serve(listener: TcpListener, scene: Scene, asset_dir: PathBuf) -> CliResult<()> {
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept failed: {e}");
                continue;
            }
        };
        let session = Session::new(scene.clone(), asset_dir.clone());
        thread::spawn(move || {
            if let Err(e) = handle_connection(stream, session) {
                eprintln!("session ended: {e}");
            }
        });
    }
    Ok(())
}

pub fn handle_connection(stream: TcpStream, mut session: Session) -> CliResult<()> {
    let mut ws: WebSocket<TcpStream> =
        tungstenite::accept(stream).map_err(|e| CliError::Socket(e.to_string()))?;
    loop {
        let msg = match ws.read() {
            Ok(m) => m,
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(CliError::Socket(e.to_string())),
        };
        let reply = match msg {
            Message::Text(text) => session.handle_text(text.as_str()),
            Message::Binary(_) => Reply::error("binary frames are not supported", None, None),
            Message::Close(_) => return Ok(()),
            _ => continue,
        };
        ws.send(Message::text(reply.to_json()))
            .map_err(|e| CliError::Socket(e.to_string()))?;
    }
}
